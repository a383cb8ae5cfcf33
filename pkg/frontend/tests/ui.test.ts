// @vitest-environment happy-dom

import { describe, expect, it } from 'vitest'

import { ApiClient } from '../src/api'
import { ViewerController } from '../src/controller'
import { renderError, renderSidebar } from '../src/ui'
import type { FetchLike } from '../src/api'

const CATALOG = {
  checksum: 'x',
  crs_tag: '',
  grid: { ncols: 4, nrows: 4, cell_size: 10, origin_x: 0, origin_y: 0 },
  heights_m: [1, 2],
  layers: [
    {
      id: 'slr_1m',
      kind: 'raster_overlay',
      title: 'Sea level +1 m',
      bounds: { projected: null, geographic: null },
      style: { color: '#1F77B4FF', opacity: 0.55 },
      href: 'masks/slr_1m.asc',
      links: {},
    },
    {
      id: 'boundary',
      kind: 'vector',
      title: 'Municipal boundary',
      bounds: { projected: null, geographic: null },
      style: { color: '#555555FF', opacity: 1 },
      href: 'boundary.geojson',
      links: {},
    },
  ],
  lulc_years: [],
  study_area_km2: 1,
  geographic_projection: null,
  metadata: {},
}

const STATS = {
  study_area_km2: 1,
  stats: [
    {
      height_m: 1,
      inundated_cells: 7,
      area_km2: 0.0007,
      pct_of_study_area: 0.07,
      study_area_km2: 1,
    },
    {
      height_m: 2,
      inundated_cells: 11,
      area_km2: 0.0011,
      pct_of_study_area: 0.11,
      study_area_km2: 1,
    },
  ],
}

const fakeFetch: FetchLike = async (url) => {
  const path = new URL(url, 'http://svc').pathname
  const body =
    path === '/api/catalog'
      ? CATALOG
      : path === '/api/stats'
        ? STATS
        : { type: 'FeatureCollection', features: [] }
  return new Response(JSON.stringify(body), { status: 200 })
}

describe('error banner', () => {
  it('shows the message and retries on click', () => {
    const container = document.createElement('div')
    let retried = 0
    renderError(container, 'connection refused', () => retried++)
    expect(container.querySelector('.error-banner')!.textContent).toContain(
      'connection refused',
    )
    container.querySelector('button')!.click()
    expect(retried).toBe(1)
  })
})

describe('sidebar', () => {
  async function sidebar() {
    const controller = new ViewerController(new ApiClient('http://svc', fakeFetch))
    await controller.load()
    const container = document.createElement('div')
    renderSidebar(container, controller)
    return { controller, container }
  }

  it('renders a button per height and marks the selection', async () => {
    const { controller, container } = await sidebar()
    const buttons = [...container.querySelectorAll<HTMLButtonElement>('.height-buttons button')]
    expect(buttons.map((b) => b.textContent)).toEqual(['+1 m', '+2 m'])
    expect(buttons[1].classList.contains('selected')).toBe(true) // deepest default

    buttons[0].click()
    expect(controller.store.get().height).toBe(1)
    expect(buttons[0].classList.contains('selected')).toBe(true)
    expect(buttons[1].classList.contains('selected')).toBe(false)
  })

  it('shows the served stats values verbatim and live-updates', async () => {
    const { controller, container } = await sidebar()
    const text = () => container.querySelector('.stats-body')!.textContent!
    expect(text()).toContain('0.0011 km²') // height 2 selected by default
    controller.selectHeight(1)
    expect(text()).toContain('0.0007 km²')
    expect(text()).toContain('0.07 %')
  })

  it('lists every catalog layer with a checkbox, sliders only for rasters', async () => {
    const { controller, container } = await sidebar()
    const rows = [...container.querySelectorAll<HTMLLIElement>('.layer-control li')]
    expect(rows.map((r) => r.dataset.layerId)).toEqual(['slr_1m', 'boundary'])
    expect(rows[0].querySelector('input[type=range]')).not.toBeNull()
    expect(rows[1].querySelector('input[type=range]')).toBeNull()

    const box = rows[1].querySelector<HTMLInputElement>('input[type=checkbox]')!
    box.checked = false
    box.dispatchEvent(new Event('change'))
    expect(controller.store.get().layers.boundary.visible).toBe(false)
  })
})
