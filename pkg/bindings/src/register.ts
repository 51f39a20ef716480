/**
 * Scripting interface over the qpool simulator in single-rank mode.
 *
 * A QubitRegister records the gate sequence and, on every query, renders it
 * in the simulator's circuit text format, executes the `qpool run` command
 * synchronously, and parses the report. No numerical logic lives here:
 * every operation is a pure pass-through to the primary CLI.
 */
import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface Amplitude {
  readonly re: number;
  readonly im: number;
}

export interface RegisterOptions {
  /** Command used to invoke the simulator CLI; defaults to $QPOOL_CLI or "qpool". */
  cliCommand?: string[];
  /** Master seed forwarded to the CLI (decides nothing in noiseless runs). */
  seed?: number;
}

interface Report {
  probabilities: number[];
  amplitudes: Amplitude[];
  maxcut?: number;
}

type Edge = readonly [number, number];

function defaultCommand(): string[] {
  const fromEnv = process.env.QPOOL_CLI;
  return fromEnv ? fromEnv.split(" ") : ["qpool"];
}

export class QubitRegister {
  readonly numQubits: number;
  private readonly command: string[];
  private readonly seed: number;
  private initIndex = 0;
  private gateLines: string[] = [];

  constructor(numQubits: number, options: RegisterOptions = {}) {
    if (!Number.isInteger(numQubits) || numQubits < 1) {
      throw new Error(`need a positive qubit count, got ${numQubits}`);
    }
    this.numQubits = numQubits;
    this.command = options.cliCommand ?? defaultCommand();
    this.seed = options.seed ?? 0;
  }

  /** Reset to a computational basis state ("base" is the only supported kind). */
  Initialize(kind: string, index: number): this {
    if (kind !== "base") {
      throw new Error(`unsupported initialization kind "${kind}"`);
    }
    if (!Number.isInteger(index) || index < 0 || index >= 2 ** this.numQubits) {
      throw new Error(`basis index ${index} out of range`);
    }
    this.initIndex = index;
    this.gateLines = [];
    return this;
  }

  ApplyHadamard(qubit: number): this {
    return this.push(`h ${this.checkQubit(qubit)}`);
  }

  ApplyPauliX(qubit: number): this {
    return this.push(`x ${this.checkQubit(qubit)}`);
  }

  ApplyPauliY(qubit: number): this {
    return this.push(`y ${this.checkQubit(qubit)}`);
  }

  ApplyPauliZ(qubit: number): this {
    return this.push(`z ${this.checkQubit(qubit)}`);
  }

  ApplyRotationX(qubit: number, angle: number): this {
    return this.push(`rx ${this.checkQubit(qubit)} ${formatAngle(angle)}`);
  }

  ApplyRotationY(qubit: number, angle: number): this {
    return this.push(`ry ${this.checkQubit(qubit)} ${formatAngle(angle)}`);
  }

  ApplyRotationZ(qubit: number, angle: number): this {
    return this.push(`rz ${this.checkQubit(qubit)} ${formatAngle(angle)}`);
  }

  ApplyCPauliX(control: number, target: number): this {
    return this.push(
      `cx ${this.checkQubit(control)} ${this.checkQubit(target)}`,
    );
  }

  ApplyCPauliZ(control: number, target: number): this {
    return this.push(
      `cz ${this.checkQubit(control)} ${this.checkQubit(target)}`,
    );
  }

  /** Probability of observing `qubit` in |1>. */
  GetProbability(qubit: number): number {
    this.checkQubit(qubit);
    return this.execute().probabilities[qubit];
  }

  /** Read-only amplitude table (registers of up to 10 qubits). */
  GetAmplitudes(): readonly Amplitude[] {
    if (this.numQubits > 10) {
      throw new Error("amplitude table is reported for up to 10 qubits");
    }
    return this.execute().amplitudes;
  }

  /** Expectation of the cut-counting observable for an edge list. */
  MaxCutExpectation(edges: readonly Edge[]): number {
    const value = this.execute(edges).maxcut;
    if (value === undefined) {
      throw new Error("simulator report carried no maxcut line");
    }
    return value;
  }

  /** The circuit text this register would hand to the simulator. */
  circuitText(): string {
    const lines = [`qubits ${this.numQubits}`];
    for (let q = 0; q < this.numQubits; q += 1) {
      if ((this.initIndex >> q) & 1) {
        lines.push(`x ${q}`);
      }
    }
    lines.push(...this.gateLines);
    return lines.join("\n") + "\n";
  }

  private push(line: string): this {
    this.gateLines.push(line);
    return this;
  }

  private checkQubit(qubit: number): number {
    if (!Number.isInteger(qubit) || qubit < 0 || qubit >= this.numQubits) {
      throw new Error(`qubit ${qubit} out of range for ${this.numQubits}`);
    }
    return qubit;
  }

  private execute(edges?: readonly Edge[]): Report {
    const dir = mkdtempSync(join(tmpdir(), "qpool-register-"));
    try {
      const circuitPath = join(dir, "register.qc");
      writeFileSync(circuitPath, this.circuitText());
      const args = [
        "run",
        circuitPath,
        "--seed",
        String(this.seed),
      ];
      if (edges !== undefined) {
        const graphPath = join(dir, "register.graph");
        writeFileSync(graphPath, graphText(this.numQubits, edges));
        args.push("--maxcut", graphPath);
      }
      const proc = spawnSync(this.command[0], [...this.command.slice(1), ...args], {
        encoding: "utf8",
      });
      if (proc.error) {
        throw new Error(`cannot invoke simulator CLI: ${proc.error.message}`);
      }
      if (proc.status !== 0) {
        throw new Error(
          `simulator exited with code ${proc.status}: ${proc.stderr.trim()}`,
        );
      }
      return parseReport(proc.stdout, this.numQubits);
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  }
}

function formatAngle(angle: number): string {
  if (!Number.isFinite(angle)) {
    throw new Error(`angle must be finite, got ${angle}`);
  }
  return String(angle);
}

function graphText(numVertices: number, edges: readonly Edge[]): string {
  const lines = [`vertices ${numVertices}`];
  for (const [u, v] of edges) {
    lines.push(`edge ${u} ${v}`);
  }
  return lines.join("\n") + "\n";
}

function parseReport(stdout: string, numQubits: number): Report {
  const probabilities = new Array<number>(numQubits).fill(NaN);
  const amplitudes: Amplitude[] = [];
  let maxcut: number | undefined;
  for (const raw of stdout.split("\n")) {
    const parts = raw.trim().split(/\s+/);
    if (parts[0] === "prob") {
      probabilities[Number(parts[1])] = Number(parts[2]);
    } else if (parts[0] === "amp") {
      amplitudes[Number(parts[1])] = {
        re: Number(parts[2]),
        im: Number(parts[3]),
      };
    } else if (parts[0] === "maxcut") {
      maxcut = Number(parts[1]);
    }
  }
  if (probabilities.some(Number.isNaN)) {
    throw new Error("simulator report was missing probability lines");
  }
  return { probabilities, amplitudes, maxcut };
}
