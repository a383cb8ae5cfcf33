import type { ViewerConfig } from './types'

const DEFAULTS: ViewerConfig = {
  serviceUrl: '',
  baseMapUrl: 'https://tile.openstreetmap.org/{z}/{x}/{y}.png',
  attribution: '&copy; OpenStreetMap contributors',
}

/** Load ./viewer-config.json next to the bundle; fall back to same-origin
 * service and OSM tiles when it is absent. */
export async function loadConfig(fetchFn = fetch): Promise<ViewerConfig> {
  try {
    const response = await fetchFn('./viewer-config.json')
    if (!response.ok) return { ...DEFAULTS }
    const body = (await response.json()) as Partial<ViewerConfig>
    return { ...DEFAULTS, ...body }
  } catch {
    return { ...DEFAULTS }
  }
}
