import 'leaflet/dist/leaflet.css'
import './style.css'

import { ApiClient } from './api'
import { loadConfig } from './config'
import { ViewerController } from './controller'
import { decodeState, encodeState } from './hash'
import { MapView } from './leafletmap'
import { bindKeyboard, renderError, renderSidebar } from './ui'

async function boot(): Promise<void> {
  const sidebar = document.getElementById('sidebar')!
  const mapContainer = document.getElementById('map')!

  const config = await loadConfig()
  const controller = new ViewerController(new ApiClient(config.serviceUrl))

  try {
    await controller.load(decodeState(window.location.hash))
  } catch (err) {
    renderError(sidebar, err instanceof Error ? err.message : String(err), () => void boot())
    return
  }

  renderSidebar(sidebar, controller)
  bindKeyboard(controller)

  const view = new MapView(mapContainer, controller, config)
  await view.build()

  // two-way URL-hash sync: state changes rewrite the hash, manual hash
  // edits (or navigation) are pushed back into the store
  let applyingHash = false
  controller.store.subscribe((state) => {
    if (applyingHash) return
    const encoded = encodeState(state)
    if (window.location.hash !== encoded) {
      history.replaceState(null, '', encoded)
    }
  })
  window.addEventListener('hashchange', () => {
    applyingHash = true
    try {
      const restored = decodeState(window.location.hash)
      controller.store.update(restored)
      if (restored.viewport) {
        view.map.setView(
          [restored.viewport.lat, restored.viewport.lng],
          restored.viewport.zoom,
        )
      }
    } finally {
      applyingHash = false
    }
  })
  history.replaceState(null, '', encodeState(controller.store.get()))
}

void boot()
