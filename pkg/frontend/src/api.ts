// Thin typed client over the scenario service. The catalog response is
// cached against its ETag: a 304 revalidation reuses the parsed layers.

import type {
  CatalogBody,
  OverlayBounds,
  PoiCollection,
  QueryOutside,
  QueryPayload,
  StatsBody,
} from './types'

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ServiceError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message)
  }
}

export interface CatalogResult {
  body: CatalogBody
  etag: string | null
  fromCache: boolean
}

export type QueryResult =
  | { kind: 'data'; payload: QueryPayload }
  | { kind: 'outside'; extent: number[]; message: string }

export class ApiClient {
  private cachedCatalog: { body: CatalogBody; etag: string | null } | null = null

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  url(path: string): string {
    const base = this.baseUrl.replace(/\/$/, '')
    return `${base}${path}`
  }

  private async getJson<T>(path: string): Promise<T> {
    let response: Response
    try {
      response = await this.fetchFn(this.url(path))
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`)
    }
    if (!response.ok) {
      throw new ServiceError(`${path} failed with ${response.status}`, response.status)
    }
    return (await response.json()) as T
  }

  async catalog(): Promise<CatalogResult> {
    const headers: Record<string, string> = {}
    if (this.cachedCatalog?.etag) {
      headers['If-None-Match'] = this.cachedCatalog.etag
    }
    let response: Response
    try {
      response = await this.fetchFn(this.url('/api/catalog'), { headers })
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`)
    }
    if (response.status === 304 && this.cachedCatalog) {
      return { body: this.cachedCatalog.body, etag: this.cachedCatalog.etag, fromCache: true }
    }
    if (!response.ok) {
      throw new ServiceError(`catalog failed with ${response.status}`, response.status)
    }
    const body = (await response.json()) as CatalogBody
    const etag = response.headers.get('ETag')
    this.cachedCatalog = { body, etag }
    return { body, etag, fromCache: false }
  }

  stats(): Promise<StatsBody> {
    return this.getJson<StatsBody>('/api/stats')
  }

  pois(): Promise<PoiCollection> {
    return this.getJson<PoiCollection>('/api/pois')
  }

  scenarioBounds(height: number | string): Promise<OverlayBounds> {
    return this.getJson<OverlayBounds>(`/api/scenario/${height}/bounds`)
  }

  lulcBounds(year: string): Promise<OverlayBounds> {
    return this.getJson<OverlayBounds>(`/api/lulc/${year}/bounds`)
  }

  boundaryGeojson(): Promise<unknown> {
    return this.getJson<unknown>('/api/vector/boundary.geojson')
  }

  overlayUrl(height: number | string): string {
    return this.url(`/api/scenario/${height}/overlay.png`)
  }

  lulcUrl(year: string): string {
    return this.url(`/api/lulc/${year}.png`)
  }

  async query(
    height: number,
    point: { lon: number; lat: number } | { x: number; y: number },
  ): Promise<QueryResult> {
    const params = new URLSearchParams({ h: String(height) })
    if ('lon' in point) {
      params.set('lon', String(point.lon))
      params.set('lat', String(point.lat))
    } else {
      params.set('x', String(point.x))
      params.set('y', String(point.y))
    }
    let response: Response
    try {
      response = await this.fetchFn(this.url(`/api/query?${params.toString()}`))
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`)
    }
    if (response.status === 422) {
      const body = (await response.json()) as QueryOutside
      return { kind: 'outside', extent: body.extent ?? [], message: body.error }
    }
    if (!response.ok) {
      throw new ServiceError(`query failed with ${response.status}`, response.status)
    }
    return { kind: 'data', payload: (await response.json()) as QueryPayload }
  }
}
