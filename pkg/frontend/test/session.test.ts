import { readFileSync } from 'node:fs'
import { describe, expect, it } from 'vitest'

import type { ServerMessage, TickPayload } from '../src/protocol'
import { SessionView } from '../src/session'

// recorded from a live session of the bundled example score with the
// finish toggle held on: eight ticks, scenario ends at unit 7
const recorded: ServerMessage[] = JSON.parse(
  readFileSync(new URL('./fixtures/finish-run.json', import.meta.url), 'utf-8'),
)

const hello = recorded[0]

function tick(unit: number, over: Partial<TickPayload> = {}): ServerMessage {
  return {
    type: 'tick',
    payload: {
      unit,
      active: [],
      transfers: [],
      proc_events: [],
      vars: {},
      warnings: [],
      points: {},
      ...over,
    },
  }
}

describe('replaying a recorded run', () => {
  it('builds controls from the declared variables', () => {
    const view = new SessionView()
    view.apply(hello)
    expect(view.controls).toEqual([
      { name: 'finish', kind: 'toggle', lo: 0, hi: 1, value: null, pending: null },
    ])
    expect(view.hello?.format).toBe('branchscore-score/1')
    expect(view.hello?.points.map((p) => p.id)).toContain('e_c')
  })

  it('tracks activations and ends with the transport disabled', () => {
    const view = new SessionView()
    for (const msg of recorded) view.apply(msg)
    expect(view.endedAt).toBe(7)
    expect(view.running).toBe(false)
    expect(view.history.map((h) => h.unit)).toEqual([0, 1, 2, 4, 5, 7])
    expect(view.history[0].points).toEqual(['s_a'])
    expect(view.history.at(-1)?.points).toContain('e_a')
    expect(view.transportControl('start')).toBeNull()
    expect(view.transportControl('reset')).not.toBeNull()
  })

  it('every tick carries a boolean per point', () => {
    const view = new SessionView()
    view.apply(hello)
    const pointIds = view.hello!.points.map((p) => p.id).sort()
    for (const msg of recorded) {
      if (msg.type !== 'tick') continue
      expect(Object.keys(msg.payload.points).sort()).toEqual(pointIds)
    }
  })
})

describe('variable controls', () => {
  it('marks a set_var pending until a tick echoes it', () => {
    const view = new SessionView()
    view.apply(hello)
    const out = view.setVar('finish', 1)
    expect(out).toEqual({ type: 'set_var', payload: { name: 'finish', value: 1 } })
    expect(view.control('finish')?.pending).toBe(1)

    view.apply(tick(0))
    expect(view.control('finish')?.pending).toBe(1) // not echoed yet

    view.apply(tick(1, { vars: { finish: 1 } }))
    expect(view.control('finish')?.pending).toBeNull()
    expect(view.control('finish')?.value).toBe(1)
  })

  it('re-asserts held values after each tick', () => {
    const view = new SessionView()
    view.apply(hello)
    view.setVar('finish', 1)
    expect(view.reassertions()).toEqual([
      { type: 'set_var', payload: { name: 'finish', value: 1 } },
    ])
    view.release('finish')
    expect(view.reassertions()).toEqual([])
  })

  it('clamps slider values to the declared domain', () => {
    const view = new SessionView()
    view.apply({
      type: 'hello',
      payload: {
        ...(hello as any).payload,
        variables: [{ name: 'level', lo: 2, hi: 9 }],
      },
    })
    expect(view.control('level')?.kind).toBe('slider')
    expect(view.setVar('level', 40)?.payload).toEqual({ name: 'level', value: 9 })
    expect(view.setVar('level', -3)?.payload).toEqual({ name: 'level', value: 2 })
    expect(view.setVar('nonexistent', 1)).toBeNull()
  })

  it('queues a toggle while stopped', () => {
    const view = new SessionView()
    view.apply(hello)
    expect(view.running).toBe(false)
    view.setVar('finish', 1)
    expect(view.control('finish')?.pending).toBe(1)
    view.transportControl('start')
    expect(view.running).toBe(true)
    view.apply(tick(0, { vars: { finish: 1 } }))
    expect(view.control('finish')?.pending).toBeNull()
  })
})

describe('reconnect and errors', () => {
  it('rebuilds state from a fresh hello plus the next tick', () => {
    const view = new SessionView()
    for (const msg of recorded.slice(0, 4)) view.apply(msg)
    expect(view.history.length).toBeGreaterThan(0)

    view.apply(hello) // reconnect: server greets again
    expect(view.lastTick).toBeNull()
    expect(view.history).toEqual([])

    view.apply(tick(5, { active: ['s_c'] }))
    expect(view.lastTick?.unit).toBe(5)
    expect(view.history).toEqual([{ unit: 5, points: ['s_c'] }])
  })

  it('held values survive a reconnect', () => {
    const view = new SessionView()
    view.apply(hello)
    view.setVar('finish', 1)
    view.apply(hello)
    expect(view.control('finish')?.pending).toBe(1)
    expect(view.reassertions().length).toBe(1)
  })

  it('collects error messages without losing the session', () => {
    const view = new SessionView()
    view.apply(hello)
    view.apply({ type: 'error', payload: { message: "unknown variable: 'ghost'" } })
    expect(view.errors).toEqual(["unknown variable: 'ghost'"])
    view.apply(tick(0, { active: ['s_a'] }))
    expect(view.lastTick?.unit).toBe(0)
  })
})
