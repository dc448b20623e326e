import { ApiClient } from './api.js'
import { render } from './dom.js'
import { dispatchKey } from './keyboard.js'
import { SessionController } from './session.js'

async function pickSession(api: ApiClient): Promise<string | null> {
  const fromUrl = new URLSearchParams(window.location.search).get('session')
  if (fromUrl) return fromUrl
  const { sessions } = await api.listSessions()
  return sessions[sessions.length - 1] ?? null
}

async function boot(): Promise<void> {
  const root = document.getElementById('app')!
  const api = new ApiClient('')
  const sessionId = await pickSession(api)
  if (!sessionId) {
    root.textContent = 'no sessions yet: create one via POST /session, then reload'
    return
  }
  const controller = new SessionController(api, sessionId)
  controller.onChange((view) => render(root, view, controller))
  window.addEventListener('keydown', (event) => {
    const view = controller.view()
    if (view.phase !== 'annotating' && view.phase !== 'error') return
    const handled = dispatchKey(event, view.classNames.length, {
      choose: (i) => void controller.choose(i),
      skip: () => void controller.skip(),
      retry: () => void controller.retry(),
    })
    if (handled) event.preventDefault()
  })
  await controller.load()
}

void boot()
