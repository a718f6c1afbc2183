/**
 * End-to-end walkthrough: synthetic data, trained threshold, method
 * comparison. Prints the same numbers the CLI report contains.
 */

import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { bindBuild, bindQuery, bindTrain, readLvec, runCli } from "./index.js";

const work = mkdtempSync(join(tmpdir(), "lotus-example-"));
const base = join(work, "base.lvec");
const queries = join(work, "queries.lvec");

try {
  runCli([
    "gen", "--base", base, "--queries", queries,
    "--clusters", "20", "--per-cluster", "50", "--dim", "8",
    "--n-queries", "50", "--seed", "0",
  ]);
  console.log("generated 1000 base vectors and 50 queries (D=8)");

  const probe = bindBuild(base, 0.0);
  const epsStar = bindTrain(probe, 0.3, 30, 10, { trainQueries: 200, seed: 0 });
  probe.drop();
  console.log(`trained threshold for lambda=0.3: eps* = ${epsStar}`);

  const handle = bindBuild(base, epsStar);
  const report = handle.evalOn(queries, {
    methods: "none,clustering,gmm,lotus",
    lambda: 0.3,
    s: 30,
    k: 10,
    trials: 3,
    seed: 0,
  });
  console.log("method        f_mean      div_term     filter_ms   mem_bits");
  for (const m of report.methods) {
    const f = m.f_mean === null ? "-" : m.f_mean.toFixed(6);
    const dv = m.diversity_term_mean === null ? "-" : m.diversity_term_mean.toFixed(6);
    console.log(
      `${m.method.padEnd(12)}  ${f.padStart(9)}  ${dv.padStart(10)}  ` +
      `${m.filter.ms.toFixed(4).padStart(9)}  ${m.memory_overhead_bits}`,
    );
  }

  const q = readLvec(queries);
  const firstQuery = Array.from(q.data.slice(0, q.d));
  const ids = bindQuery(handle, firstQuery, 30, 10);
  console.log(`diverse ids for query 0: [${ids.join(", ")}]`);
  handle.drop();
} finally {
  rmSync(work, { recursive: true, force: true });
}
