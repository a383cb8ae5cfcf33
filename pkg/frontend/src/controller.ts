// Orchestrates the service client and the viewer state. Everything the UI
// shows comes through here, so the contract tests can drive the viewer
// without a DOM or a map: the controller's models ARE the displayed data.

import { ApiClient, QueryResult, ServiceError } from './api'
import { Store, ViewerState, stepHeight, visibleHeights } from './state'
import type { CatalogBody, LayerDescriptor, PoiCollection, StatsRow } from './types'

export interface LayerControlEntry {
  id: string
  title: string
  kind: LayerDescriptor['kind']
  visible: boolean
  opacity: number
}

export interface StatsPanelModel {
  height_m: string
  area_km2: string
  pct_of_study_area: string
  inundated_cells: string
  study_area_km2: string
}

export interface OverlayModel {
  height: number
  url: string
  visible: boolean
  opacity: number
  color: string | null
}

export class ViewerController {
  readonly store = new Store()
  catalog: CatalogBody | null = null
  statsRows: StatsRow[] = []
  pois: PoiCollection = { type: 'FeatureCollection', features: [] }
  lastError: string | null = null

  constructor(readonly api: ApiClient) {}

  /** Fetch catalog, stats and POIs; initialise layer state and the default
   * height (the deepest published level, shown cumulatively). */
  async load(restored?: Partial<ViewerState>): Promise<void> {
    this.lastError = null
    const { body } = await this.api.catalog()
    this.catalog = body
    const [stats, pois] = await Promise.all([this.api.stats(), this.api.pois()])
    this.statsRows = stats.stats
    this.pois = pois

    const layers: ViewerState['layers'] = {}
    for (const layer of body.layers) {
      const fromHash = restored?.layers?.[layer.id]
      layers[layer.id] = {
        visible: fromHash?.visible ?? true,
        opacity: fromHash?.opacity ?? layer.style.opacity,
      }
    }
    const heights = body.heights_m
    let height = restored?.height ?? null
    if (height === null || !heights.includes(height)) {
      height = heights.length > 0 ? heights[heights.length - 1] : null
    }
    this.store.update({
      height,
      cumulative: restored?.cumulative ?? true,
      layers,
      viewport: restored?.viewport ?? null,
      basemap: restored?.basemap ?? 'default',
    })
  }

  get heights(): number[] {
    return this.catalog?.heights_m ?? []
  }

  /** One row per published layer, in catalog order, with live visibility. */
  layerControl(): LayerControlEntry[] {
    if (!this.catalog) return []
    const state = this.store.get()
    return this.catalog.layers.map((layer) => ({
      id: layer.id,
      title: layer.title,
      kind: layer.kind,
      visible: state.layers[layer.id]?.visible ?? true,
      opacity: state.layers[layer.id]?.opacity ?? layer.style.opacity,
    }))
  }

  selectHeight(height: number): void {
    if (!this.heights.includes(height)) return
    this.store.update({ height })
  }

  stepHeight(direction: 1 | -1): void {
    const next = stepHeight(this.heights, this.store.get().height, direction)
    if (next !== null) this.store.update({ height: next })
  }

  setCumulative(on: boolean): void {
    this.store.update({ cumulative: on })
  }

  /** Scenario overlays with their URLs and effective visibility. */
  overlays(): OverlayModel[] {
    const state = this.store.get()
    const shown = new Set(visibleHeights(this.heights, state.height, state.cumulative))
    return this.heights.map((height) => {
      const id = this.maskLayerId(height)
      const layer = state.layers[id]
      const descriptor = this.catalog?.layers.find((l) => l.id === id)
      return {
        height,
        url: this.api.overlayUrl(formatHeight(height)),
        visible: (layer?.visible ?? true) && shown.has(height),
        opacity: layer?.opacity ?? descriptor?.style.opacity ?? 1,
        color: descriptor?.style.color ?? null,
      }
    })
  }

  maskLayerId(height: number): string {
    return `slr_${formatHeight(height)}m`
  }

  /** The service's stats row for the selected height, stringified verbatim
   * (the panel shows exactly what the service said, never a recomputation). */
  statsPanel(): StatsPanelModel | null {
    const height = this.store.get().height
    if (height === null) return null
    const row = this.statsRows.find((r) => r.height_m === height)
    if (!row) return null
    return {
      height_m: String(row.height_m),
      area_km2: String(row.area_km2),
      pct_of_study_area: String(row.pct_of_study_area),
      inundated_cells: String(row.inundated_cells),
      study_area_km2: String(row.study_area_km2),
    }
  }

  async clickQuery(point: { lon: number; lat: number } | { x: number; y: number }): Promise<QueryResult> {
    const height = this.store.get().height
    if (height === null) throw new ServiceError('no height selected')
    return this.api.query(height, point)
  }
}

export function formatHeight(height: number): string {
  // trailing-zero-free label, matching the service's canonical form
  return String(height)
}

/** Popup body for a query result: the payload's numbers, verbatim. */
export function queryPopupLines(result: QueryResult): string[] {
  if (result.kind === 'outside') {
    return ['Outside the study area', `extent: [${result.extent.map(String).join(', ')}]`]
  }
  const p = result.payload
  const lines = [
    `Inundated at +${String(p.height_m)} m: ${p.inundated ? 'yes' : 'no'}`,
    `Ground elevation: ${p.ground_elev_m === null ? 'n/a' : `${String(p.ground_elev_m)} m`}`,
    `Water depth: ${String(p.depth_m)} m`,
  ]
  if (p.lulc_class) lines.push(`Land cover: ${p.lulc_class.name} (${String(p.lulc_class.id)})`)
  if (p.nearest_poi) {
    lines.push(`Nearest place: ${p.nearest_poi.name} (${String(p.nearest_poi.distance_m)} m)`)
  }
  return lines
}
