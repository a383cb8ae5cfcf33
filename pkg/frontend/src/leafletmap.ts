// Leaflet bindings: overlays placed by the service's bounds, markers from
// the POI collection, and click-to-query popups. All numbers shown come
// from the controller's models.

import L from 'leaflet'
import { ViewerController, queryPopupLines } from './controller'
import type { OverlayBounds, PoiFeature, ViewerConfig } from './types'

export class MapView {
  readonly map: L.Map
  private overlays = new Map<number, L.ImageOverlay>()
  private lulcOverlay: L.ImageOverlay | null = null
  private boundaryLayer: L.GeoJSON | null = null
  private poiLayer: L.LayerGroup | null = null

  constructor(
    container: HTMLElement,
    private readonly controller: ViewerController,
    config: ViewerConfig,
  ) {
    this.map = L.map(container, { zoomSnap: 0.25 })
    L.tileLayer(config.baseMapUrl, { attribution: config.attribution, maxZoom: 19 }).addTo(
      this.map,
    )
    this.map.on('click', (event: L.LeafletMouseEvent) => {
      void this.queryAt(event.latlng)
    })
    this.map.on('moveend zoomend', () => {
      const center = this.map.getCenter()
      this.controller.store.update({
        viewport: { lat: center.lat, lng: center.lng, zoom: this.map.getZoom() },
      })
    })
  }

  private geoBounds(bounds: OverlayBounds): L.LatLngBounds {
    const g = bounds.geographic
    if (!g) throw new Error('service catalog has no geographic bounds')
    const [west, south, east, north] = g
    return L.latLngBounds([south, west], [north, east])
  }

  async build(): Promise<void> {
    const controller = this.controller

    for (const height of controller.heights) {
      const bounds = await controller.api.scenarioBounds(height)
      const overlay = L.imageOverlay(
        controller.api.overlayUrl(height),
        this.geoBounds(bounds),
        { opacity: 1 },
      )
      this.overlays.set(height, overlay)
    }

    const catalog = controller.catalog
    if (catalog?.lulc_years.includes('current')) {
      const bounds = await controller.api.lulcBounds('current')
      this.lulcOverlay = L.imageOverlay(
        controller.api.lulcUrl('current'),
        this.geoBounds(bounds),
      )
    }

    // the service serves vector layers already converted to lon/lat
    const boundary = (await controller.api.boundaryGeojson()) as GeoJSON.GeoJSON
    const boundaryDescriptor = catalog?.layers.find((l) => l.id === 'boundary')
    this.boundaryLayer = L.geoJSON(boundary, {
      style: {
        color: cssColor(boundaryDescriptor?.style.color ?? '#555555FF'),
        weight: 2,
        fill: false,
        dashArray: '6 4',
      },
    })

    this.poiLayer = L.layerGroup(
      controller.pois.features.map((f) => this.poiMarker(f)),
    )

    const state = controller.store.get()
    if (state.viewport) {
      this.map.setView([state.viewport.lat, state.viewport.lng], state.viewport.zoom)
    } else {
      const first = this.overlays.values().next().value as L.ImageOverlay | undefined
      if (first) this.map.fitBounds(first.getBounds())
      else this.map.setView([0, 0], 2)
    }

    controller.store.subscribe(() => this.apply())
    this.apply()
  }

  /** Reconcile Leaflet layers with the controller's current models. */
  apply(): void {
    const state = this.controller.store.get()
    for (const model of this.controller.overlays()) {
      const overlay = this.overlays.get(model.height)
      if (!overlay) continue
      if (model.visible && !this.map.hasLayer(overlay)) overlay.addTo(this.map)
      if (!model.visible && this.map.hasLayer(overlay)) overlay.remove()
      overlay.setOpacity(model.opacity)
    }
    const lulcState = state.layers['lulc_current']
    if (this.lulcOverlay) {
      const show = lulcState?.visible ?? true
      if (show && !this.map.hasLayer(this.lulcOverlay)) this.lulcOverlay.addTo(this.map)
      if (!show && this.map.hasLayer(this.lulcOverlay)) this.lulcOverlay.remove()
      this.lulcOverlay.setOpacity(lulcState?.opacity ?? 0.7)
    }
    if (this.boundaryLayer) {
      const show = state.layers['boundary']?.visible ?? true
      if (show && !this.map.hasLayer(this.boundaryLayer)) this.boundaryLayer.addTo(this.map)
      if (!show && this.map.hasLayer(this.boundaryLayer)) this.boundaryLayer.remove()
    }
    if (this.poiLayer) {
      const show = state.layers['pois']?.visible ?? true
      if (show && !this.map.hasLayer(this.poiLayer)) this.poiLayer.addTo(this.map)
      if (!show && this.map.hasLayer(this.poiLayer)) this.poiLayer.remove()
    }
  }

  private poiMarker(feature: PoiFeature): L.Layer {
    const props = feature.properties
    if (props.lat === null || props.lon === null) return L.layerGroup([])
    const marker = L.marker([props.lat, props.lon], { title: props.name })
    const flood = Object.entries(props.flood_summary)
      .map(
        ([label, entry]) =>
          `<li>+${label} m: ${entry.inundated ? `flooded, depth ${String(entry.depth_m)} m` : 'dry'}</li>`,
      )
      .join('')
    marker.bindPopup(
      `<div class="poi-popup">
        <h3>${escapeHtml(props.name)}</h3>
        ${props.image ? `<img src="${encodeURI(props.image)}" alt="">` : ''}
        <p>${escapeHtml(props.description)}</p>
        <ul>${flood}</ul>
        ${props.link ? `<a href="${encodeURI(props.link)}" target="_blank" rel="noopener">More…</a>` : ''}
      </div>`,
    )
    return marker
  }

  private async queryAt(latlng: L.LatLng): Promise<void> {
    let lines: string[]
    try {
      const result = await this.controller.clickQuery({ lon: latlng.lng, lat: latlng.lat })
      lines = queryPopupLines(result)
    } catch (err) {
      lines = [`Query failed: ${String(err)}`]
    }
    L.popup()
      .setLatLng(latlng)
      .setContent(`<div class="query-popup">${lines.map((l) => `<p>${escapeHtml(l)}</p>`).join('')}</div>`)
      .openOn(this.map)
  }

}

export function cssColor(rgba: string): string {
  // #RRGGBBAA -> rgba(), which Leaflet path styles accept
  const s = rgba.replace('#', '')
  if (s.length !== 8) return rgba
  const [r, g, b, a] = [0, 2, 4, 6].map((i) => parseInt(s.slice(i, i + 2), 16))
  return `rgba(${r}, ${g}, ${b}, ${a / 255})`
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}
