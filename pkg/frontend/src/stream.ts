// Scripted tweet stream: a fixed list replayed at a chosen rate. The
// script is bundled as a JSON asset so every demo run sends the same
// tweets in the same order; the timer is injectable for tests.

import { inputMessage, type InputMessage } from "./protocol.js";

export interface Tweet {
  tweetId: number;
  lat: number;
  lon: number;
  hour: number;
}

export interface TimerHost {
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
}

export class TweetStream {
  private timer: number | null = null;
  private cursor = 0;
  sent = 0;

  constructor(
    private script: Tweet[],
    private send: (msg: InputMessage) => void,
    private host: TimerHost = globalThis as unknown as TimerHost,
  ) {}

  get running(): boolean {
    return this.timer !== null;
  }

  start(ratePerSecond: number): void {
    if (this.timer !== null || ratePerSecond <= 0) return;
    this.timer = this.host.setInterval(() => {
      const tweet = this.script[this.cursor];
      if (tweet === undefined) {
        this.stop();
        return;
      }
      this.cursor += 1;
      this.sent += 1;
      this.send(inputMessage("tweetEvent", { ...tweet }));
    }, 1000 / ratePerSecond);
  }

  stop(): void {
    if (this.timer !== null) {
      this.host.clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Back to the top of the script; the next start resends from tweet 0. */
  rewind(): void {
    this.cursor = 0;
  }
}

export async function loadScript(url: string): Promise<Tweet[]> {
  const response = await fetch(url);
  if (!response.ok) throw new Error(`cannot load tweet script: ${url}`);
  return (await response.json()) as Tweet[];
}
