/**
 * Wire protocol between the experiment engine and a trial worker.
 *
 * One UTF-8 JSON object per line: commands arrive on stdin, events leave on
 * stdout. Encoders always newline-terminate; decoders accept any valid JSON
 * spacing and ignore unknown keys on events.
 */

export class ProtocolError extends Error {}

export class NonFiniteMetricError extends ProtocolError {
  constructor(name: string, value: unknown) {
    super(`metric ${JSON.stringify(name)} has non-finite or non-numeric value ${String(value)}`);
  }
}

export type InitCommand = {
  cmd: "init";
  trial_id: string;
  params: Record<string, unknown>;
  restore_path: string | null;
};
export type StepCommand = { cmd: "step" };
export type SaveCommand = { cmd: "save"; path: string };
export type StopCommand = { cmd: "stop" };
export type Command = InitCommand | StepCommand | SaveCommand | StopCommand;

export type ResultEvent = { event: "result"; step: number; metrics: Record<string, number> };
export type SavedEvent = { event: "saved"; path: string };
export type DoneEvent = { event: "done" };
export type ErrorEvent = { event: "error"; message: string };
export type WorkerEvent = ResultEvent | SavedEvent | DoneEvent | ErrorEvent;

export function decodeCommand(line: string): Command {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch (exc) {
    throw new ProtocolError(`line is not valid JSON: ${String(exc)}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("command line must be a JSON object");
  }
  const doc = obj as Record<string, unknown>;
  const variant = doc["cmd"];
  if (variant === undefined) {
    throw new ProtocolError("command line lacks a 'cmd' key");
  }
  switch (variant) {
    case "init": {
      const trialId = doc["trial_id"];
      const params = doc["params"];
      const restorePath = doc["restore_path"] ?? null;
      if (typeof trialId !== "string") throw new ProtocolError("init requires a string trial_id");
      if (typeof params !== "object" || params === null || Array.isArray(params)) {
        throw new ProtocolError("init requires a params object");
      }
      if (restorePath !== null && typeof restorePath !== "string") {
        throw new ProtocolError("init restore_path must be a string or null");
      }
      return {
        cmd: "init",
        trial_id: trialId,
        params: params as Record<string, unknown>,
        restore_path: restorePath,
      };
    }
    case "step":
      return { cmd: "step" };
    case "save": {
      const path = doc["path"];
      if (typeof path !== "string") throw new ProtocolError("save requires a string path");
      return { cmd: "save", path };
    }
    case "stop":
      return { cmd: "stop" };
    default:
      throw new ProtocolError(`unknown command variant ${JSON.stringify(variant)}`);
  }
}

export function checkMetrics(metrics: Record<string, number>): void {
  for (const [name, value] of Object.entries(metrics)) {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new NonFiniteMetricError(name, value);
    }
  }
}

/** Serialize one event as a newline-terminated JSON line. */
export function encodeEvent(event: WorkerEvent): string {
  if (event.event === "result") {
    checkMetrics(event.metrics);
  }
  return JSON.stringify(event) + "\n";
}
