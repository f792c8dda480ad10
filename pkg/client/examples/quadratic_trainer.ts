/**
 * Scripted training program on the cooperative SDK: the two-parameter
 * quadratic toy. Reports loss = -(1.2 - theta1^2 - theta2^2) each step and
 * nudges theta by the surrogate gradient scaled by params h1/h2. Checkpoints
 * serialize {t, theta} as JSON.
 *
 * Launch under the engine with: {"cmd": ["node", ".../quadratic_trainer.js"]}
 */

import { readFileSync, writeFileSync } from "node:fs";

import { runTrial } from "../src/index.js";

let t = 0;
let theta: [number, number] = [0.9, 0.9];

await runTrial(
  async (tune) => {
    const h1 = Number(tune.params["h1"]);
    const h2 = Number(tune.params["h2"]);
    for (;;) {
      const q = 1.2 - theta[0] * theta[0] - theta[1] * theta[1];
      const loss = -q;
      theta = [theta[0] * (1 + 0.02 * h1), theta[1] * (1 + 0.02 * h2)];
      t += 1;
      if ((await tune.report({ loss })) === "stop") {
        return;
      }
    }
  },
  {
    save: (path) => {
      writeFileSync(path, JSON.stringify({ t, theta }));
    },
    restore: (path) => {
      const state = JSON.parse(readFileSync(path, "utf8"));
      t = state.t;
      theta = state.theta;
      return t;
    },
  },
);
