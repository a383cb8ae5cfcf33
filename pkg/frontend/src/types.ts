// Payload shapes served by the scenario service. The viewer never invents
// or recomputes these numbers; it displays them as delivered.

export interface LayerStyle {
  color: string | null
  opacity: number
}

export interface LayerLinks {
  overlay_png?: string
  bounds?: string
  polygons?: string
  geojson?: string
}

export interface LayerDescriptor {
  id: string
  kind: 'raster_overlay' | 'vector' | 'points'
  title: string
  bounds: {
    projected: number[] | null
    geographic: number[] | null
  }
  style: LayerStyle
  href: string
  links: LayerLinks
}

export interface CatalogBody {
  checksum: string
  crs_tag: string
  grid: {
    ncols: number
    nrows: number
    cell_size: number
    origin_x: number
    origin_y: number
  }
  heights_m: number[]
  layers: LayerDescriptor[]
  lulc_years: string[]
  study_area_km2: number | null
  geographic_projection: Record<string, unknown> | null
  metadata: Record<string, unknown>
}

export interface StatsRow {
  height_m: number
  inundated_cells: number
  area_km2: number
  pct_of_study_area: number
  study_area_km2: number
}

export interface StatsBody {
  study_area_km2: number | null
  stats: StatsRow[]
}

export interface OverlayBounds {
  projected: number[]
  geographic: number[] | null
  crs_tag: string
  downsample_factor: number
  width_px: number
  height_px: number
}

export interface QueryPayload {
  x: number
  y: number
  height_m: number
  inundated: boolean
  ground_elev_m: number | null
  depth_m: number
  lulc_class: { id: number; name: string } | null
  nearest_poi: { id: string; name: string; distance_m: number } | null
}

export interface QueryOutside {
  error: string
  extent: number[]
  crs_tag?: string
}

export interface PoiProperties {
  id: string
  name: string
  description: string
  image: string
  link: string
  lon: number | null
  lat: number | null
  ground_elev_m: number | null
  flood_summary: Record<string, { inundated: boolean; depth_m: number }>
}

export interface PoiFeature {
  type: 'Feature'
  geometry: { type: 'Point'; coordinates: [number, number] }
  properties: PoiProperties
}

export interface PoiCollection {
  type: 'FeatureCollection'
  features: PoiFeature[]
}

export interface ViewerConfig {
  serviceUrl: string
  baseMapUrl: string
  attribution: string
}
