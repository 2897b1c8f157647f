import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the e2e spawns a real server process
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
