/** Promise-based line reader over a byte stream; yields null at end of input. */

export class LineReader {
  private buffer = "";
  private lines: string[] = [];
  private waiters: Array<(line: string | null) => void> = [];
  private ended = false;

  constructor(stream: NodeJS.ReadableStream) {
    stream.on("data", (chunk: Buffer | string) => this.push(chunk.toString("utf8")));
    stream.on("end", () => this.finish());
    stream.on("error", () => this.finish());
    stream.on("close", () => this.finish());
  }

  private push(text: string): void {
    this.buffer += text;
    let index;
    while ((index = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 1);
      if (line.trim().length === 0) continue;
      const waiter = this.waiters.shift();
      if (waiter) {
        waiter(line);
      } else {
        this.lines.push(line);
      }
    }
  }

  private finish(): void {
    this.ended = true;
    while (this.waiters.length > 0) {
      this.waiters.shift()!(null);
    }
  }

  /** Next non-empty line, or null once the stream is exhausted. */
  next(): Promise<string | null> {
    const queued = this.lines.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    if (this.ended) return Promise.resolve(null);
    return new Promise((resolve) => this.waiters.push(resolve));
  }
}
