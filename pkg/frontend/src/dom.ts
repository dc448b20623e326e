// DOM rendering: one sample at a time, then a cycle-complete screen, with
// the progress dashboard always visible underneath.

import { shortcutLegend } from './keyboard.js'
import { f1PolylinePoints, progressViewModel } from './progress.js'
import type { SessionController, SessionView } from './session.js'

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag)
  node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

export function render(root: HTMLElement, view: SessionView, controller: SessionController): void {
  root.replaceChildren()

  if (view.networkError) {
    const banner = el('div', 'banner banner-error')
    banner.append(
      el('span', '', `network trouble: ${view.networkError} — your answers are buffered`),
    )
    const retry = el('button', 'retry', 'retry (r)')
    retry.addEventListener('click', () => void controller.retry())
    banner.append(retry)
    root.append(banner)
  }
  if (view.notice) {
    root.append(el('div', 'banner banner-notice', view.notice))
  }

  switch (view.phase) {
    case 'loading':
      root.append(el('p', 'status', 'loading session...'))
      break
    case 'annotating':
      renderSample(root, view, controller)
      break
    case 'cycle-complete': {
      root.append(el('h2', 'headline', `cycle ${view.cycle} complete`))
      const next = el('button', 'primary', 'fetch next batch')
      next.addEventListener('click', () => void controller.nextBatch())
      root.append(next)
      break
    }
    case 'session-complete':
      root.append(el('h2', 'headline', 'all done: budget reached or pool exhausted'))
      break
    case 'error':
      root.append(el('p', 'status', 'could not reach the service'))
      break
  }

  renderDashboard(root, view)
}

function renderSample(root: HTMLElement, view: SessionView, controller: SessionController): void {
  const sample = view.sample
  if (!sample) return
  root.append(el('div', 'counter', `sample ${view.answered + 1} / ${view.total}`))
  root.append(el('div', 'sample-text', sample.text))

  const buttons = el('div', 'choices')
  view.classNames.forEach((name, index) => {
    const button = el('button', 'choice', `${index + 1} · ${name}`)
    button.addEventListener('click', () => void controller.choose(index))
    buttons.append(button)
  })
  const skip = el('button', 'choice choice-skip', 's · skip')
  skip.addEventListener('click', () => void controller.skip())
  buttons.append(skip)
  root.append(buttons)

  root.append(el('div', 'legend', shortcutLegend(view.classNames).join('   ')))
  if (view.bufferedCount > 0) {
    root.append(el('div', 'buffered', `${view.bufferedCount} answer(s) in flight`))
  }
}

function renderDashboard(root: HTMLElement, view: SessionView): void {
  if (!view.progress) return
  const model = progressViewModel(view.progress)
  const dash = el('section', 'dashboard')
  dash.append(el('h3', '', 'progress'))

  const bar = el('div', 'bar')
  const fill = el('div', 'bar-fill')
  fill.style.width = `${model.percent}%`
  bar.append(fill)
  dash.append(bar)
  dash.append(
    el('div', 'bar-label', `${model.labeled} / ${model.budget} labeled (${model.percent}%)`),
  )
  dash.append(el('div', 'stat', `cycle ${model.cycle} · pool ${model.poolRemaining}`))
  if (model.alphaText !== null) {
    dash.append(el('div', 'stat', `mixing weight α = ${model.alphaText}`))
  }

  // the F1 panel only exists when the service evaluates against a test set
  const points = f1PolylinePoints(model.f1Series, 220, 60)
  if (points) {
    const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg')
    svg.setAttribute('viewBox', '0 0 220 60')
    svg.setAttribute('class', 'f1-chart')
    const line = document.createElementNS('http://www.w3.org/2000/svg', 'polyline')
    line.setAttribute('points', points)
    line.setAttribute('fill', 'none')
    line.setAttribute('stroke', '#2a7')
    line.setAttribute('stroke-width', '2')
    svg.append(line)
    dash.append(el('h4', '', 'macro F1 per cycle'))
    dash.append(svg)
    const latest = model.f1Series![model.f1Series!.length - 1]!
    dash.append(el('div', 'stat', `latest F1 ${latest.toFixed(3)}`))
  }
  root.append(dash)
}
