/**
 * Class-based (direct control) adapter: the engine drives training through
 * step/save/restore methods, one command at a time. Same wire protocol as the
 * cooperative session with the loop inverted.
 */

import { LineReader } from "./linereader.js";
import { decodeCommand, encodeEvent, ProtocolError, WorkerEvent } from "./protocol.js";

export interface Trainable {
  setup(params: Record<string, unknown>, trialId: string): void | Promise<void>;
  /** Perform one training step and return its metrics. */
  step(): Record<string, number> | Promise<Record<string, number>>;
  save(path: string): void | Promise<void>;
  /** Recover state; optionally return the step count of the checkpoint. */
  restore(path: string): void | number | Promise<void | number>;
}

export async function runTrainable(
  trainable: Trainable,
  input: NodeJS.ReadableStream = process.stdin,
  output: NodeJS.WritableStream = process.stdout,
): Promise<void> {
  const write = (event: WorkerEvent) => output.write(encodeEvent(event));
  const reader = new LineReader(input);
  let step = 0;
  let started = false;
  while (true) {
    const line = await reader.next();
    if (line === null) {
      return;
    }
    let cmd;
    try {
      cmd = decodeCommand(line);
    } catch (exc) {
      write({ event: "error", message: String(exc) });
      return;
    }
    try {
      if (cmd.cmd === "init") {
        if (started) {
          throw new ProtocolError("duplicate init command");
        }
        started = true;
        await trainable.setup(cmd.params, cmd.trial_id);
        if (cmd.restore_path !== null) {
          const offset = await trainable.restore(cmd.restore_path);
          if (typeof offset === "number" && Number.isInteger(offset) && offset >= 0) {
            step = offset;
          }
        }
      } else if (!started) {
        throw new ProtocolError(`received ${cmd.cmd} before init`);
      } else if (cmd.cmd === "step") {
        const metrics = await trainable.step();
        step += 1;
        write({ event: "result", step, metrics });
      } else if (cmd.cmd === "save") {
        await trainable.save(cmd.path);
        write({ event: "saved", path: cmd.path });
      } else {
        write({ event: "done" });
        return;
      }
    } catch (exc) {
      write({ event: "error", message: String(exc) });
      return;
    }
  }
}
