/**
 * Cooperative training API: the user script owns the loop, pulls params from
 * the session, and calls report() after every training step. Checkpoint and
 * stop directives from the engine are honored inside report().
 *
 * The session runs in lockstep with the engine's command stream: the engine
 * authorizes one step up front (right after init), and every report consumes
 * exactly one actionable directive. A save directive therefore always
 * snapshots the state the engine asked for.
 */

import { LineReader } from "./linereader.js";
import {
  ProtocolError,
  WorkerEvent,
  checkMetrics,
  decodeCommand,
  encodeEvent,
} from "./protocol.js";

export interface SessionCallbacks {
  /** Write a checkpoint of the current training state to `path`. */
  save?: (path: string) => void | Promise<void>;
  /**
   * Recover training state from `path`. Return the step count the checkpoint
   * was taken at so reported steps continue the sequence; returning nothing
   * starts numbering at 1.
   */
  restore?: (path: string) => void | number | Promise<void | number>;
}

export type Directive = "continue" | "stop";

export class ClientSession {
  readonly trialId: string;
  readonly params: Record<string, unknown>;
  step: number;

  private stopped = false;
  private doneSent = false;

  private constructor(
    private readonly reader: LineReader,
    private readonly output: NodeJS.WritableStream,
    private readonly callbacks: SessionCallbacks,
    trialId: string,
    params: Record<string, unknown>,
    step: number,
  ) {
    this.trialId = trialId;
    this.params = params;
    this.step = step;
  }

  /**
   * Read the init command (it must be first), run the restore callback when a
   * restore path is present, and consume the engine's initial step grant.
   */
  static async init(
    callbacks: SessionCallbacks = {},
    input: NodeJS.ReadableStream = process.stdin,
    output: NodeJS.WritableStream = process.stdout,
  ): Promise<ClientSession> {
    const reader = new LineReader(input);
    const first = await reader.next();
    if (first === null) {
      throw new ProtocolError("input closed before an init command arrived");
    }
    const cmd = decodeCommand(first);
    if (cmd.cmd !== "init") {
      throw new ProtocolError(`first command must be init, got ${JSON.stringify(cmd.cmd)}`);
    }
    let step = 0;
    if (cmd.restore_path !== null && callbacks.restore) {
      const offset = await callbacks.restore(cmd.restore_path);
      if (typeof offset === "number" && Number.isInteger(offset) && offset >= 0) {
        step = offset;
      }
    }
    const session = new ClientSession(reader, output, callbacks, cmd.trial_id, cmd.params, step);
    await session.awaitDirective();
    return session;
  }

  private send(event: WorkerEvent): void {
    if (this.doneSent) return;
    try {
      this.output.write(encodeEvent(event));
    } catch {
      // engine is gone; surface as a stop on the next interaction
      this.stopped = true;
    }
  }

  private async awaitDirective(): Promise<Directive> {
    while (true) {
      const line = await this.reader.next();
      if (line === null) {
        this.stopped = true;
        return "stop";
      }
      const cmd = decodeCommand(line);
      if (cmd.cmd === "step") {
        return "continue";
      }
      if (cmd.cmd === "stop") {
        this.stopped = true;
        return "stop";
      }
      if (cmd.cmd === "save") {
        if (this.callbacks.save) {
          await this.callbacks.save(cmd.path);
        }
        this.send({ event: "saved", path: cmd.path });
        continue;
      }
      throw new ProtocolError(`unexpected mid-run command ${JSON.stringify(cmd.cmd)}`);
    }
  }

  /**
   * Report one step's metrics and block until the engine directs the next
   * move. Metrics must be finite numbers; nothing is written otherwise.
   */
  async report(metrics: Record<string, number>): Promise<Directive> {
    checkMetrics(metrics);
    if (this.stopped) {
      return "stop";
    }
    this.step += 1;
    this.send({ event: "result", step: this.step, metrics });
    return this.awaitDirective();
  }

  /** Emit the terminal done event; further writes are suppressed. */
  finish(): void {
    if (this.doneSent) return;
    this.send({ event: "done" });
    this.doneSent = true;
  }
}

/**
 * Run a function-based trainable: init the session, hand it to `body`, and
 * always emit done afterwards (also on error, after an error event).
 */
export async function runTrial(
  body: (session: ClientSession) => void | Promise<void>,
  callbacks: SessionCallbacks = {},
  input: NodeJS.ReadableStream = process.stdin,
  output: NodeJS.WritableStream = process.stdout,
): Promise<void> {
  const session = await ClientSession.init(callbacks, input, output);
  try {
    await body(session);
  } catch (exc) {
    output.write(encodeEvent({ event: "error", message: String(exc) }));
    throw exc;
  } finally {
    session.finish();
  }
}
