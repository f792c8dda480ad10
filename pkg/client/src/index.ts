export { LineReader } from "./linereader.js";
export {
  Command,
  DoneEvent,
  ErrorEvent,
  InitCommand,
  NonFiniteMetricError,
  ProtocolError,
  ResultEvent,
  SaveCommand,
  SavedEvent,
  StepCommand,
  StopCommand,
  WorkerEvent,
  checkMetrics,
  decodeCommand,
  encodeEvent,
} from "./protocol.js";
export { ClientSession, Directive, SessionCallbacks, runTrial } from "./session.js";
export { Trainable, runTrainable } from "./trainable.js";
