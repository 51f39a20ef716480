import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { QubitRegister } from "../src/register.js";

const CLI = process.env.QPOOL_CLI ? process.env.QPOOL_CLI.split(" ") : ["qpool"];

/** Run the primary CLI directly on hand-written circuit text. */
function runPrimary(circuitText: string): Map<number, { re: number; im: number }> {
  const dir = mkdtempSync(join(tmpdir(), "qpool-parity-"));
  try {
    const path = join(dir, "direct.qc");
    writeFileSync(path, circuitText);
    const proc = spawnSync(CLI[0], [...CLI.slice(1), "run", path, "--seed", "0"], {
      encoding: "utf8",
    });
    expect(proc.status, proc.stderr).toBe(0);
    const amps = new Map<number, { re: number; im: number }>();
    for (const line of proc.stdout.split("\n")) {
      const parts = line.trim().split(/\s+/);
      if (parts[0] === "amp") {
        amps.set(Number(parts[1]), { re: Number(parts[2]), im: Number(parts[3]) });
      }
    }
    return amps;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

describe("QubitRegister basics", () => {
  it("produces the Bell-state statistics", () => {
    const psi = new QubitRegister(2);
    psi.ApplyHadamard(0).ApplyCPauliX(0, 1);
    expect(psi.GetProbability(0)).toBeCloseTo(0.5, 12);
    expect(psi.GetProbability(1)).toBeCloseTo(0.5, 12);
    const amps = psi.GetAmplitudes();
    expect(amps[0].re).toBeCloseTo(Math.SQRT1_2, 12);
    expect(amps[1].re).toBeCloseTo(0, 12);
    expect(amps[2].re).toBeCloseTo(0, 12);
    expect(amps[3].re).toBeCloseTo(Math.SQRT1_2, 12);
  });

  it("runs the classic register snippet: X(1), H(0), CX(1 -> 0)", () => {
    // |00> -X1-> |10> -H0-> (|10>+|11>)/sqrt2 -CX-> (|11>+|10>)/sqrt2
    // qubit 1 is |1> with certainty throughout
    const psi = new QubitRegister(4);
    psi.Initialize("base", 0);
    psi.ApplyPauliX(1);
    psi.ApplyHadamard(0);
    psi.ApplyCPauliX(1, 0);
    expect(psi.GetProbability(1)).toBeCloseTo(1.0, 12);
    const expectation = -1 * psi.GetProbability(1) + 1 * (1 - psi.GetProbability(1));
    expect(expectation).toBeCloseTo(-1.0, 12);
  });

  it("places basis-state initialization at the right index", () => {
    const psi = new QubitRegister(3);
    psi.Initialize("base", 5);
    const amps = psi.GetAmplitudes();
    expect(amps[5].re).toBeCloseTo(1.0, 12);
    for (let i = 0; i < 8; i += 1) {
      if (i !== 5) {
        expect(Math.hypot(amps[i].re, amps[i].im)).toBeCloseTo(0, 12);
      }
    }
  });

  it("reports the cut expectation of a uniform superposition", () => {
    const psi = new QubitRegister(3);
    psi.ApplyHadamard(0).ApplyHadamard(1).ApplyHadamard(2);
    const triangle: Array<[number, number]> = [[0, 1], [1, 2], [0, 2]];
    expect(psi.MaxCutExpectation(triangle)).toBeCloseTo(1.5, 12);
  });

  it("does not mutate state across queries", () => {
    const psi = new QubitRegister(1);
    psi.ApplyRotationY(0, 0.8);
    const first = psi.GetProbability(0);
    expect(psi.GetProbability(0)).toBe(first);
    expect(first).toBeCloseTo(Math.sin(0.4) ** 2, 12);
  });
});

describe("parity with the primary CLI", () => {
  it("matches a direct CLI run of a 6-qubit circuit to 1e-12", () => {
    const gates: Array<[string, ...number[]]> = [
      ["h", 0], ["h", 1], ["h", 2], ["h", 3], ["h", 4], ["h", 5],
      ["rx", 2, 0.28318530717958623], ["cx", 0, 3], ["rz", 5, 1.0471975511965976],
      ["cz", 4, 1], ["ry", 0, 2.356194490192345], ["x", 3], ["cx", 5, 2],
      ["y", 1], ["rz", 0, 0.1001001001001001], ["cz", 2, 3], ["z", 4],
      ["ry", 5, 0.7234567890123456], ["cx", 1, 4], ["rx", 0, 3.0000000000000004],
    ];
    const psi = new QubitRegister(6);
    const directLines = ["qubits 6"];
    for (const [kind, ...rest] of gates) {
      switch (kind) {
        case "h": psi.ApplyHadamard(rest[0]); directLines.push(`h ${rest[0]}`); break;
        case "x": psi.ApplyPauliX(rest[0]); directLines.push(`x ${rest[0]}`); break;
        case "y": psi.ApplyPauliY(rest[0]); directLines.push(`y ${rest[0]}`); break;
        case "z": psi.ApplyPauliZ(rest[0]); directLines.push(`z ${rest[0]}`); break;
        case "rx": psi.ApplyRotationX(rest[0], rest[1]); directLines.push(`rx ${rest[0]} ${rest[1]}`); break;
        case "ry": psi.ApplyRotationY(rest[0], rest[1]); directLines.push(`ry ${rest[0]} ${rest[1]}`); break;
        case "rz": psi.ApplyRotationZ(rest[0], rest[1]); directLines.push(`rz ${rest[0]} ${rest[1]}`); break;
        case "cx": psi.ApplyCPauliX(rest[0], rest[1]); directLines.push(`cx ${rest[0]} ${rest[1]}`); break;
        case "cz": psi.ApplyCPauliZ(rest[0], rest[1]); directLines.push(`cz ${rest[0]} ${rest[1]}`); break;
      }
    }
    const expected = runPrimary(directLines.join("\n") + "\n");
    const amps = psi.GetAmplitudes();
    expect(amps.length).toBe(64);
    for (let i = 0; i < 64; i += 1) {
      const want = expected.get(i)!;
      expect(Math.abs(amps[i].re - want.re)).toBeLessThan(1e-12);
      expect(Math.abs(amps[i].im - want.im)).toBeLessThan(1e-12);
    }
  });
});

describe("error handling", () => {
  it("rejects out-of-range qubits locally", () => {
    const psi = new QubitRegister(2);
    expect(() => psi.ApplyHadamard(2)).toThrow(/out of range/);
    expect(() => psi.GetProbability(-1)).toThrow(/out of range/);
  });

  it("rejects unsupported initialization kinds", () => {
    expect(() => new QubitRegister(2).Initialize("thermal", 0)).toThrow(
      /unsupported/,
    );
  });

  it("caps the amplitude table at ten qubits", () => {
    expect(() => new QubitRegister(11).GetAmplitudes()).toThrow(/10 qubits/);
  });

  it("surfaces simulator-side errors as exceptions", () => {
    const psi = new QubitRegister(2, { cliCommand: ["qpool-not-a-command"] });
    expect(() => psi.GetProbability(0)).toThrow(/cannot invoke/);
  });
});
