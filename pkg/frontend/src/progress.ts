// View-model helpers for the progress dashboard; every number round-trips
// from a service payload, nothing is fabricated client-side.

import type { ProgressPayload } from './types.js'

export interface ProgressViewModel {
  labeled: number
  budget: number
  percent: number
  cycle: number
  poolRemaining: number
  alphaText: string | null
  f1Series: number[] | null
}

export function progressViewModel(progress: ProgressPayload): ProgressViewModel {
  const percent = progress.budget > 0
    ? Math.round((100 * progress.labeled) / progress.budget)
    : 0
  return {
    labeled: progress.labeled,
    budget: progress.budget,
    percent: Math.min(100, percent),
    cycle: progress.cycle,
    poolRemaining: progress.pool,
    alphaText: progress.alpha === null ? null : progress.alpha.toFixed(2),
    f1Series: progress.f1_history ?? null,
  }
}

/** Points for an inline SVG polyline; null when there is no F1 to show. */
export function f1PolylinePoints(
  series: number[] | null,
  width: number,
  height: number,
): string | null {
  if (!series || series.length === 0) return null
  if (series.length === 1) {
    const y = height - series[0]! * height
    return `0,${y.toFixed(1)} ${width},${y.toFixed(1)}`
  }
  const step = width / (series.length - 1)
  return series
    .map((value, i) => `${(i * step).toFixed(1)},${(height - value * height).toFixed(1)}`)
    .join(' ')
}
