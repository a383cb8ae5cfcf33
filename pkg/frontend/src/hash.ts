// URL-hash codec for the viewer state. Numbers are written with
// JavaScript's shortest round-trip formatting, so decode(encode(s))
// restores every value exactly.

import type { ViewerState } from './state'
import { initialState } from './state'

const LAYER_SEP = ','
const FIELD_SEP = '!'

export function encodeState(state: ViewerState): string {
  const params = new URLSearchParams()
  if (state.height !== null) params.set('h', String(state.height))
  params.set('cum', state.cumulative ? '1' : '0')
  if (state.viewport) {
    const { lat, lng, zoom } = state.viewport
    params.set('v', [lat, lng, zoom].map(String).join(LAYER_SEP))
  }
  const ids = Object.keys(state.layers).sort()
  if (ids.length > 0) {
    params.set(
      'L',
      ids
        .map((id) => {
          const layer = state.layers[id]
          return [id, layer.visible ? '1' : '0', String(layer.opacity)].join(FIELD_SEP)
        })
        .join(LAYER_SEP),
    )
  }
  if (state.basemap !== 'default') params.set('b', state.basemap)
  return `#${params.toString()}`
}

export function decodeState(hash: string): ViewerState {
  const state = initialState()
  const raw = hash.startsWith('#') ? hash.slice(1) : hash
  if (!raw) return state
  const params = new URLSearchParams(raw)

  const h = params.get('h')
  if (h !== null && h !== '' && Number.isFinite(Number(h))) {
    state.height = Number(h)
  }
  const cum = params.get('cum')
  if (cum !== null) state.cumulative = cum !== '0'

  const v = params.get('v')
  if (v) {
    const parts = v.split(LAYER_SEP).map(Number)
    if (parts.length === 3 && parts.every(Number.isFinite)) {
      state.viewport = { lat: parts[0], lng: parts[1], zoom: parts[2] }
    }
  }

  const layers = params.get('L')
  if (layers) {
    for (const chunk of layers.split(LAYER_SEP)) {
      const [id, visible, opacity] = chunk.split(FIELD_SEP)
      if (!id) continue
      const op = Number(opacity)
      state.layers[id] = {
        visible: visible !== '0',
        opacity: Number.isFinite(op) ? op : 1,
      }
    }
  }

  const basemap = params.get('b')
  if (basemap) state.basemap = basemap
  return state
}
