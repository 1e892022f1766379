// Thin DOM layer: renders a SessionView and forwards control input.
// All state logic lives in session.ts.

import { connectLive, LiveClient } from './client'
import { SessionView } from './session'

function el(tag: string, cls: string, text = ''): HTMLElement {
  const node = document.createElement(tag)
  node.className = cls
  if (text) node.textContent = text
  return node
}

function renderPoints(view: SessionView, host: HTMLElement): void {
  host.replaceChildren()
  if (!view.hello) return
  const active = new Set(view.lastTick?.active ?? [])
  for (const p of view.hello.points) {
    const cls = active.has(p.id) ? 'point active' : 'point'
    const node = el('span', cls, p.id)
    node.title = `${p.pre}/${p.post}`
    host.appendChild(node)
  }
}

function renderHistory(view: SessionView, host: HTMLElement): void {
  host.replaceChildren()
  for (const entry of view.history.slice(-30)) {
    host.appendChild(el('li', 'history-entry', `${entry.unit}: ${entry.points.join(', ')}`))
  }
}

function renderControls(view: SessionView, client: LiveClient, host: HTMLElement): void {
  host.replaceChildren()
  for (const control of view.controls) {
    const row = el('label', control.pending !== null ? 'control pending' : 'control')
    row.appendChild(el('span', 'control-name', control.name))
    const input = document.createElement('input')
    if (control.kind === 'toggle') {
      input.type = 'checkbox'
      input.checked = (control.pending ?? control.value) === 1
      input.onchange = () => {
        if (input.checked) {
          client.send(view.setVar(control.name, 1))
        } else {
          view.release(control.name)
          client.send(view.setVar(control.name, 0))
          view.release(control.name)
        }
      }
    } else {
      input.type = 'range'
      input.min = String(control.lo)
      input.max = String(control.hi)
      input.value = String(control.pending ?? control.value ?? control.lo)
      input.onchange = () => client.send(view.setVar(control.name, Number(input.value)))
    }
    row.appendChild(input)
    host.appendChild(row)
  }
}

export function mount(root: HTMLElement, url: string): LiveClient {
  const status = el('div', 'status')
  const transport = el('div', 'transport')
  const points = el('div', 'points')
  const controls = el('div', 'controls')
  const history = el('ul', 'history')
  const errors = el('div', 'errors')
  root.replaceChildren(status, transport, points, controls, history, errors)

  const buttons = new Map<string, HTMLButtonElement>()
  const client = connectLive(url, render)
  for (const cmd of ['start', 'stop', 'reset'] as const) {
    const b = document.createElement('button')
    b.textContent = cmd
    b.onclick = () => {
      client.send(client.view.transportControl(cmd))
      render(client.view)
    }
    buttons.set(cmd, b)
    transport.appendChild(b)
  }

  function render(view: SessionView): void {
    const unit = view.lastTick ? `unit ${view.lastTick.unit}` : 'waiting'
    status.textContent =
      view.endedAt !== null ? `ended at unit ${view.endedAt}` : unit
    status.classList.toggle('ended', view.endedAt !== null)
    for (const [cmd, b] of buttons) {
      b.disabled = view.endedAt !== null && cmd !== 'reset'
    }
    renderPoints(view, points)
    renderControls(view, client, controls)
    renderHistory(view, history)
    errors.textContent = view.errors.slice(-3).join(' | ')
  }

  render(client.view)
  return client
}
