/**
 * Scripting interface for the lotus CLI.
 *
 * Everything goes through the two documented surfaces: the binary vector
 * and table formats, and the CLI subcommands with their JSON reports. No
 * in-process state is shared with the core, so results are exactly what
 * the CLI would print for the same files and flags.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const LVEC_MAGIC = "LVEC";
const LVEC_VERSION = 1;
const HEADER_BYTES = 4 + 1 + 8 + 8;

export interface LvecData {
  n: number;
  d: number;
  /** row-major float32 values, n*d entries */
  data: Float32Array;
}

/** Write rows as a binary vector file; values are stored as float32. */
export function writeLvec(path: string, rows: number[][]): void {
  if (rows.length === 0 || rows[0].length === 0) {
    throw new Error("writeLvec needs at least one row and one column");
  }
  const n = rows.length;
  const d = rows[0].length;
  const buf = Buffer.alloc(HEADER_BYTES + 4 * n * d);
  buf.write(LVEC_MAGIC, 0, "ascii");
  buf.writeUInt8(LVEC_VERSION, 4);
  buf.writeBigUInt64LE(BigInt(n), 5);
  buf.writeBigUInt64LE(BigInt(d), 13);
  let off = HEADER_BYTES;
  for (const row of rows) {
    if (row.length !== d) {
      throw new Error(`ragged rows: expected ${d} values, got ${row.length}`);
    }
    for (const v of row) {
      buf.writeFloatLE(v, off);
      off += 4;
    }
  }
  writeFileSync(path, buf);
}

/** Read a binary vector file written by this module or by the CLI. */
export function readLvec(path: string): LvecData {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 4) !== LVEC_MAGIC) {
    throw new Error(`${path}: not a vector file`);
  }
  if (buf.readUInt8(4) !== LVEC_VERSION) {
    throw new Error(`${path}: unsupported version ${buf.readUInt8(4)}`);
  }
  const n = Number(buf.readBigUInt64LE(5));
  const d = Number(buf.readBigUInt64LE(13));
  if (buf.length !== HEADER_BYTES + 4 * n * d) {
    throw new Error(`${path}: length does not match header`);
  }
  const data = new Float32Array(n * d);
  for (let i = 0; i < n * d; i++) {
    data[i] = buf.readFloatLE(HEADER_BYTES + 4 * i);
  }
  return { n, d, data };
}

/** CLI launcher; override with LOTUS_CLI="python3 -m lotusfilter.cli". */
function cliCommand(): string[] {
  const override = process.env.LOTUS_CLI;
  return override ? override.split(" ") : ["lotus"];
}

/** Run a CLI subcommand; throws with the CLI's stderr text on failure. */
export function runCli(args: string[]): string {
  const [cmd, ...head] = cliCommand();
  const proc = spawnSync(cmd, [...head, ...args], { encoding: "utf8" });
  if (proc.error) {
    throw new Error(`failed to launch ${cmd}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr ?? "").trim();
    throw new Error(`lotus ${args[0]} exited with ${proc.status}: ${detail}`);
  }
  return proc.stdout ?? "";
}

export interface PerQueryEntry {
  ids: number[];
  truncated: boolean | null;
  f: number | null;
  search_term: number | null;
  diversity_term: number | null;
}

export interface MethodReport {
  method: string;
  f_mean: number | null;
  search_term_mean: number | null;
  diversity_term_mean: number | null;
  f_count: number;
  truncation_rate: number | null;
  memory_overhead_bits: number;
  search: { ms: number; ms_mean: number; trials: number };
  filter: { ms: number; ms_mean: number; trials: number };
  total: { ms: number; ms_mean: number; trials: number };
  per_query: PerQueryEntry[];
}

export interface EvalReport {
  manifest: Record<string, unknown>;
  params: Record<string, unknown>;
  methods: MethodReport[];
}

export interface EvalParams {
  methods: string;
  lambda: number;
  s: number;
  k: number;
  safeguard?: boolean;
  trials?: number;
  seed?: number;
}

export interface TrainParams {
  epsMax?: number;
  trainQueries?: number;
  samples?: number;
  seed?: number;
}

let handleCounter = 0;

/**
 * A dataset bound to a cutoff table built at a fixed threshold.
 *
 * Owns a scratch directory holding the table and per-call artifacts.
 * drop() deletes it; any later call on the handle throws. A handle is
 * process-local and must not be used from two threads at once.
 */
export class BoundHandle {
  readonly basePath: string;
  readonly tablePath: string;
  readonly eps: number;
  private readonly workDir: string;
  private alive = true;
  private calls = 0;

  constructor(basePath: string, eps: number) {
    this.basePath = basePath;
    this.eps = eps;
    this.workDir = mkdtempSync(join(tmpdir(), `lotus-bind-${handleCounter++}-`));
    this.tablePath = join(this.workDir, "table.lotf");
    try {
      runCli([
        "build", "--base", basePath, "--table", this.tablePath,
        "--eps", String(eps),
      ]);
    } catch (err) {
      rmSync(this.workDir, { recursive: true, force: true });
      throw err;
    }
  }

  private assertAlive(): void {
    if (!this.alive) {
      throw new Error("handle was dropped");
    }
  }

  private scratch(name: string): string {
    return join(this.workDir, `${this.calls++}-${name}`);
  }

  /** Calibrate the threshold for the given objective; the bound table stays as built. */
  train(lambda: number, s: number, k: number, params: TrainParams = {}): number {
    this.assertAlive();
    const out = this.scratch("train.json");
    const args = [
      "train", "--base", this.basePath,
      "--lambda", String(lambda), "--s", String(s), "--k", String(k),
      "--out", out,
    ];
    if (params.epsMax !== undefined) args.push("--eps-max", String(params.epsMax));
    if (params.trainQueries !== undefined) {
      args.push("--train-queries", String(params.trainQueries));
    }
    if (params.samples !== undefined) args.push("--samples", String(params.samples));
    if (params.seed !== undefined) args.push("--seed", String(params.seed));
    runCli(args);
    const doc = JSON.parse(readFileSync(out, "utf8"));
    return doc.result.eps_star as number;
  }

  /**
   * Diversify the top-s candidates for one query down to k ids.
   *
   * Runs the eval subcommand, so k >= 2 (the objective's pairwise term
   * needs two results). The returned ids do not depend on lambda.
   */
  query(queryRow: number[], s: number, k: number, safeguard = true): number[] {
    this.assertAlive();
    const qPath = this.scratch("query.lvec");
    writeLvec(qPath, [queryRow]);
    const report = this.evalOn(qPath, {
      methods: "lotus",
      lambda: 0.5,
      s,
      k,
      safeguard,
      trials: 1,
    });
    return report.methods[0].per_query[0].ids;
  }

  /** Full eval report over a query file, parsed from the CLI's JSON. */
  evalOn(queriesPath: string, params: EvalParams): EvalReport {
    this.assertAlive();
    const out = this.scratch("eval.json");
    const args = [
      "eval", "--base", this.basePath, "--queries", queriesPath,
      "--table", this.tablePath, "--methods", params.methods,
      "--lambda", String(params.lambda),
      "--s", String(params.s), "--k", String(params.k),
      "--safeguard", params.safeguard === false ? "off" : "on",
      "--trials", String(params.trials ?? 3),
      "--out", out,
    ];
    if (params.seed !== undefined) args.push("--seed", String(params.seed));
    runCli(args);
    return JSON.parse(readFileSync(out, "utf8")) as EvalReport;
  }

  /** Delete the scratch directory; the handle is unusable afterwards. */
  drop(): void {
    if (this.alive) {
      this.alive = false;
      rmSync(this.workDir, { recursive: true, force: true });
    }
  }
}

/** Build a cutoff table for the dataset at the given threshold. */
export function bindBuild(basePath: string, eps: number): BoundHandle {
  return new BoundHandle(basePath, eps);
}

/** Trained threshold for the objective; handle's own table is unchanged. */
export function bindTrain(
  handle: BoundHandle,
  lambda: number,
  s: number,
  k: number,
  params: TrainParams = {},
): number {
  return handle.train(lambda, s, k, params);
}

/** Diverse ids for a single query row; see BoundHandle.query. */
export function bindQuery(
  handle: BoundHandle,
  queryRow: number[],
  s: number,
  k: number,
  safeguard = true,
): number[] {
  return handle.query(queryRow, s, k, safeguard);
}
