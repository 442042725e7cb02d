// Epsilon sweeps for the privacy-utility trade-off view. Every point
// comes from the service: one forked session per epsilon so runs never
// contaminate each other, identical seeds so curves reproduce.

import { ApiClient } from "./api.js";
import type { GridSpec, PolicyKind } from "./types.js";

export interface SweepPoint {
  epsilon: number;
  utility: number | null;
  adversary: number | null;
}

export interface SweepSpec {
  kind: PolicyKind;
  params?: object;
  label: string;
}

export interface SweepOptions {
  users: number;
  ticks: number;
  epsilons: number[];
}

export const DEFAULT_SWEEP: SweepOptions = {
  users: 10,
  ticks: 60,
  epsilons: [0.1, 0.5, 1.0, 2.0],
};

export async function runSweep(
  api: ApiClient,
  grid: GridSpec,
  seed: number,
  spec: SweepSpec,
  opts: SweepOptions = DEFAULT_SWEEP,
): Promise<SweepPoint[]> {
  const points: SweepPoint[] = [];
  for (const epsilon of opts.epsilons) {
    const { session_id } = await api.createSession(grid, seed);
    await api.putPolicy(session_id, spec.kind, spec.params ?? {});
    await api.simulate(session_id, opts.ticks, { users: opts.users, epsilon });
    const metrics = await api.metrics(session_id);
    points.push({
      epsilon,
      utility: metrics.utility_error,
      adversary: metrics.adversary_error,
    });
  }
  return points;
}

/** Saved curves for overlay comparison across policies. */
export class SweepCollection {
  readonly saved: { spec: SweepSpec; points: SweepPoint[] }[] = [];

  add(spec: SweepSpec, points: SweepPoint[]): void {
    this.saved.push({ spec, points });
  }

  clear(): void {
    this.saved.length = 0;
  }

  labels(): string[] {
    return this.saved.map((s) => s.spec.label);
  }
}
