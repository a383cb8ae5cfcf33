// Viewer state: which height is selected, what is visible at what opacity,
// where the map is looking. A plain observable store; Leaflet and the DOM
// subscribe to it, tests drive it directly.

export interface LayerState {
  visible: boolean
  opacity: number
}

export interface Viewport {
  lat: number
  lng: number
  zoom: number
}

export interface ViewerState {
  height: number | null
  cumulative: boolean
  layers: Record<string, LayerState>
  viewport: Viewport | null
  basemap: string
}

export function initialState(): ViewerState {
  return { height: null, cumulative: true, layers: {}, viewport: null, basemap: 'default' }
}

export type Listener = (state: ViewerState) => void

export class Store {
  private state: ViewerState
  private listeners: Listener[] = []

  constructor(state: ViewerState = initialState()) {
    this.state = state
  }

  get(): ViewerState {
    return this.state
  }

  update(patch: Partial<ViewerState>): ViewerState {
    this.state = { ...this.state, ...patch }
    for (const listener of this.listeners) listener(this.state)
    return this.state
  }

  setLayer(id: string, patch: Partial<LayerState>): ViewerState {
    const current = this.state.layers[id] ?? { visible: true, opacity: 1 }
    return this.update({
      layers: { ...this.state.layers, [id]: { ...current, ...patch } },
    })
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener)
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener)
    }
  }
}

/** Heights whose overlays should be visible: all up to the selected height
 * in cumulative mode (nested shades), otherwise just the selected one. */
export function visibleHeights(
  heights: number[],
  selected: number | null,
  cumulative: boolean,
): number[] {
  if (selected === null) return []
  if (!cumulative) return heights.filter((h) => h === selected)
  return heights.filter((h) => h <= selected)
}

/** The next height when stepping with the keyboard, clamped at the ends. */
export function stepHeight(
  heights: number[],
  current: number | null,
  direction: 1 | -1,
): number | null {
  if (heights.length === 0) return null
  if (current === null) return heights[0]
  const idx = heights.indexOf(current)
  if (idx < 0) return heights[0]
  const next = Math.min(heights.length - 1, Math.max(0, idx + direction))
  return heights[next]
}
