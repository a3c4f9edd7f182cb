/**
 * Line-delimited JSON protocol loop, adapter side.
 *
 * The host speaks HELLO / FIT / SCORE / BYE over our stdin, one JSON
 * object per line, and we answer HELLO_OK / FIT_OK / SCORE_OK on stdout.
 * Every message in both directions carries protocol_version. The host
 * owns ladder scaling, constraint repair, and all timing; our only jobs
 * are to declare the model in the handshake, fit on the train CSV it
 * names, and score the test CSV it names.
 *
 * Anything malformed (bad JSON, wrong version, unknown type, unreadable
 * matrix) gets an ERROR reply and a nonzero exit.
 */
import * as readline from "node:readline";

import { readMatrix } from "./csv.js";
import { fitStats, scoreWindows, type TrainStats } from "./stats.js";

export const PROTOCOL_VERSION = 1;

/** Declared default; the host scales it per tier before FIT. */
export const DEFAULT_WINDOW_LEN = 64;

export const HANDSHAKE = {
  type: "HELLO_OK",
  method_id: "moving-zscore",
  params: [{ name: "window_len", default: DEFAULT_WINDOW_LEN, role: "window" }],
  constraints: [],
  windowing: { windowed: true, w: DEFAULT_WINDOW_LEN },
  capabilities: { reports_phase_timings: false },
} as const;

interface HostMessage {
  readonly type?: unknown;
  readonly protocol_version?: unknown;
  readonly train_path?: unknown;
  readonly test_path?: unknown;
  readonly params?: unknown;
}

interface FittedModel {
  readonly stats: TrainStats;
  readonly windowLen: number;
}

function send(message: Record<string, unknown>): void {
  process.stdout.write(
    JSON.stringify({ protocol_version: PROTOCOL_VERSION, ...message }) + "\n",
  );
}

function fail(reason: string): never {
  send({ type: "ERROR", message: reason });
  process.exit(1);
}

function handleFit(message: HostMessage): FittedModel {
  const params = (message.params ?? {}) as Record<string, unknown>;
  const windowLen = Number(params["window_len"] ?? DEFAULT_WINDOW_LEN);
  const rows = readMatrix(String(message.train_path));
  return { stats: fitStats(rows), windowLen };
}

function handleScore(message: HostMessage, model: FittedModel): number[] {
  const rows = readMatrix(String(message.test_path));
  return scoreWindows(rows, model.stats, model.windowLen);
}

/** Run the message loop until BYE or EOF. */
export function serve(): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  let model: FittedModel | null = null;

  rl.on("line", (line) => {
    if (line.trim() === "") {
      return;
    }
    let message: HostMessage;
    try {
      message = JSON.parse(line) as HostMessage;
    } catch {
      fail(`host sent a non-JSON line: ${line.slice(0, 80)}`);
    }
    if (message.protocol_version !== PROTOCOL_VERSION) {
      fail(
        `host speaks protocol ${String(message.protocol_version)}, ` +
          `adapter speaks ${PROTOCOL_VERSION}`,
      );
    }
    try {
      switch (message.type) {
        case "HELLO":
          send(HANDSHAKE);
          break;
        case "FIT":
          model = handleFit(message);
          send({ type: "FIT_OK" });
          break;
        case "SCORE":
          if (model === null) {
            fail("SCORE before FIT");
          }
          send({ type: "SCORE_OK", scores: handleScore(message, model) });
          break;
        case "BYE":
          process.exit(0);
          break;
        default:
          fail(`unknown message type ${String(message.type)}`);
      }
    } catch (error) {
      fail(error instanceof Error ? error.message : String(error));
    }
  });

  rl.on("close", () => process.exit(0));
}
