/** Deformation presets per base method; must match the engine's table. */

export const REGIMES = {
  strotss: {
    low: { beta: 0.3, gamma: 75 },
    med: { beta: 0.5, gamma: 50 },
    high: { beta: 0.7, gamma: 10 },
  },
  gram: {
    low: { beta: 3, gamma: 750 },
    med: { beta: 7, gamma: 100 },
    high: { beta: 15, gamma: 100 },
  },
} as const;

export type BaseMethod = keyof typeof REGIMES;
export type Regime = keyof (typeof REGIMES)["strotss"];

export function regimeParams(base: BaseMethod, regime: Regime): { beta: number; gamma: number } {
  const entry = REGIMES[base]?.[regime];
  if (!entry) {
    throw new Error(`unknown regime ${base}/${regime}`);
  }
  return { ...entry };
}
