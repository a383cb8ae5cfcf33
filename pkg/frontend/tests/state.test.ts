import { describe, expect, it } from 'vitest'

import { Store, initialState, stepHeight, visibleHeights } from '../src/state'

describe('visibleHeights', () => {
  const heights = [1, 2, 3, 4]

  it('shows nothing with no selection', () => {
    expect(visibleHeights(heights, null, true)).toEqual([])
  })

  it('cumulative mode shades every level up to the selection', () => {
    expect(visibleHeights(heights, 3, true)).toEqual([1, 2, 3])
    expect(visibleHeights(heights, 1, true)).toEqual([1])
  })

  it('single mode shows exactly the selected overlay', () => {
    expect(visibleHeights(heights, 3, false)).toEqual([3])
  })
})

describe('stepHeight', () => {
  const heights = [1, 2, 3, 4]

  it('steps through the published order and clamps at the ends', () => {
    expect(stepHeight(heights, 2, 1)).toBe(3)
    expect(stepHeight(heights, 2, -1)).toBe(1)
    expect(stepHeight(heights, 4, 1)).toBe(4)
    expect(stepHeight(heights, 1, -1)).toBe(1)
  })

  it('falls back to the first height when unset', () => {
    expect(stepHeight(heights, null, 1)).toBe(1)
    expect(stepHeight([], null, 1)).toBeNull()
  })
})

describe('Store', () => {
  it('notifies subscribers and supports unsubscription', () => {
    const store = new Store()
    const seen: number[] = []
    const off = store.subscribe((s) => seen.push(s.height ?? -1))
    store.update({ height: 2 })
    off()
    store.update({ height: 3 })
    expect(seen).toEqual([2])
    expect(store.get().height).toBe(3)
  })

  it('patches one layer without touching the others', () => {
    const store = new Store({
      ...initialState(),
      layers: { a: { visible: true, opacity: 0.5 }, b: { visible: true, opacity: 1 } },
    })
    store.setLayer('a', { visible: false })
    expect(store.get().layers.a).toEqual({ visible: false, opacity: 0.5 })
    expect(store.get().layers.b).toEqual({ visible: true, opacity: 1 })
  })
})
