// Keyboard shortcuts: digits 1..K choose a class, "s" skips, "r" retries.

export interface KeyTarget {
  choose(classIndex: number): void
  skip(): void
  retry(): void
}

export interface KeyStroke {
  key: string
}

/** Map a keystroke onto an action; returns false when the key is unbound. */
export function dispatchKey(stroke: KeyStroke, numClasses: number, target: KeyTarget): boolean {
  const key = stroke.key.toLowerCase()
  if (key === 's') {
    target.skip()
    return true
  }
  if (key === 'r') {
    target.retry()
    return true
  }
  const digit = Number.parseInt(key, 10)
  if (Number.isInteger(digit) && digit >= 1 && digit <= numClasses) {
    target.choose(digit - 1)
    return true
  }
  return false
}

export function shortcutLegend(classNames: string[]): string[] {
  const legend = classNames.map((name, i) => `${i + 1} ${name}`)
  legend.push('s skip')
  return legend
}
