// DOM bindings: height selector, layer control with opacity sliders, the
// stats panel, error banner and about panel. Pure DOM, no map knowledge.

import { ViewerController, formatHeight } from './controller'

export function renderError(container: HTMLElement, message: string, retry: () => void): void {
  container.innerHTML = ''
  const banner = document.createElement('div')
  banner.className = 'error-banner'
  const text = document.createElement('span')
  text.textContent = `Could not load the scenario catalog: ${message}`
  const button = document.createElement('button')
  button.textContent = 'Retry'
  button.addEventListener('click', retry)
  banner.append(text, button)
  container.appendChild(banner)
}

export function renderSidebar(container: HTMLElement, controller: ViewerController): void {
  container.innerHTML = ''
  container.appendChild(heightSelector(controller))
  container.appendChild(statsPanel(controller))
  container.appendChild(layerControl(controller))
  container.appendChild(aboutPanel())
  const refresh = () => {
    refreshHeights(container, controller)
    refreshStats(container, controller)
    refreshLayerRows(container, controller)
  }
  controller.store.subscribe(refresh)
  refresh()
}

function heightSelector(controller: ViewerController): HTMLElement {
  const section = document.createElement('section')
  section.className = 'height-selector'
  const heading = document.createElement('h2')
  heading.textContent = 'Sea level'
  section.appendChild(heading)

  const group = document.createElement('div')
  group.className = 'height-buttons'
  group.setAttribute('role', 'group')
  for (const height of controller.heights) {
    const button = document.createElement('button')
    button.dataset.height = String(height)
    button.textContent = `+${formatHeight(height)} m`
    button.addEventListener('click', () => controller.selectHeight(height))
    group.appendChild(button)
  }
  section.appendChild(group)

  const cumulative = document.createElement('label')
  cumulative.className = 'cumulative-toggle'
  const box = document.createElement('input')
  box.type = 'checkbox'
  box.checked = controller.store.get().cumulative
  box.addEventListener('change', () => controller.setCumulative(box.checked))
  cumulative.append(box, document.createTextNode(' shade lower levels too'))
  section.appendChild(cumulative)

  const hint = document.createElement('p')
  hint.className = 'hint'
  hint.textContent = 'Arrow keys step through the levels; click the map for depth.'
  section.appendChild(hint)
  return section
}

function refreshHeights(container: HTMLElement, controller: ViewerController): void {
  const selected = controller.store.get().height
  container.querySelectorAll<HTMLButtonElement>('.height-buttons button').forEach((button) => {
    button.classList.toggle('selected', Number(button.dataset.height) === selected)
  })
  const box = container.querySelector<HTMLInputElement>('.cumulative-toggle input')
  if (box) box.checked = controller.store.get().cumulative
}

function statsPanel(controller: ViewerController): HTMLElement {
  const section = document.createElement('section')
  section.className = 'stats-panel'
  const heading = document.createElement('h2')
  heading.textContent = 'Flooded area'
  section.appendChild(heading)
  const body = document.createElement('dl')
  body.className = 'stats-body'
  section.appendChild(body)
  fillStats(body, controller)
  return section
}

function fillStats(body: HTMLElement, controller: ViewerController): void {
  const model = controller.statsPanel()
  body.innerHTML = ''
  if (!model) return
  const rows: [string, string][] = [
    ['Area', `${model.area_km2} km²`],
    ['Share of study area', `${model.pct_of_study_area} %`],
    ['Flooded cells', model.inundated_cells],
    ['Study area', `${model.study_area_km2} km²`],
  ]
  for (const [term, value] of rows) {
    const dt = document.createElement('dt')
    dt.textContent = term
    const dd = document.createElement('dd')
    dd.textContent = value
    body.append(dt, dd)
  }
}

function refreshStats(container: HTMLElement, controller: ViewerController): void {
  const body = container.querySelector<HTMLElement>('.stats-body')
  if (body) fillStats(body, controller)
}

function layerControl(controller: ViewerController): HTMLElement {
  const section = document.createElement('section')
  section.className = 'layer-control'
  const heading = document.createElement('h2')
  heading.textContent = 'Layers'
  section.appendChild(heading)
  const list = document.createElement('ul')
  for (const entry of controller.layerControl()) {
    const item = document.createElement('li')
    item.dataset.layerId = entry.id

    const label = document.createElement('label')
    const box = document.createElement('input')
    box.type = 'checkbox'
    box.checked = entry.visible
    box.addEventListener('change', () =>
      controller.store.setLayer(entry.id, { visible: box.checked }),
    )
    label.append(box, document.createTextNode(` ${entry.title}`))
    item.appendChild(label)

    if (entry.kind === 'raster_overlay') {
      const slider = document.createElement('input')
      slider.type = 'range'
      slider.min = '0'
      slider.max = '100'
      slider.value = String(Math.round(entry.opacity * 100))
      slider.title = 'opacity'
      slider.addEventListener('input', () =>
        controller.store.setLayer(entry.id, { opacity: Number(slider.value) / 100 }),
      )
      item.appendChild(slider)
    }
    list.appendChild(item)
  }
  section.appendChild(list)
  return section
}

function refreshLayerRows(container: HTMLElement, controller: ViewerController): void {
  const state = controller.store.get()
  container.querySelectorAll<HTMLLIElement>('.layer-control li').forEach((item) => {
    const id = item.dataset.layerId
    if (!id || !(id in state.layers)) return
    const box = item.querySelector<HTMLInputElement>('input[type=checkbox]')
    if (box) box.checked = state.layers[id].visible
  })
}

function aboutPanel(): HTMLElement {
  const section = document.createElement('section')
  section.className = 'about-panel'
  const heading = document.createElement('h2')
  heading.textContent = 'About'
  const text = document.createElement('p')
  text.textContent =
    'Flood extents come from a bathtub model with hydrologic connectivity on a ' +
    'high-resolution elevation model: a cell floods only when it sits at or below ' +
    'the selected sea level and connects to the ocean. Click anywhere for ground ' +
    'elevation and water depth; markers describe places of local interest.'
  section.append(heading, text)
  return section
}

export function bindKeyboard(controller: ViewerController): void {
  document.addEventListener('keydown', (event) => {
    if (event.key === 'ArrowUp' || event.key === 'ArrowRight') {
      controller.stepHeight(1)
      event.preventDefault()
    } else if (event.key === 'ArrowDown' || event.key === 'ArrowLeft') {
      controller.stepHeight(-1)
      event.preventDefault()
    }
  })
}
