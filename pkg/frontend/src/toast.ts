/**
 * Stacked, non-blocking notifications. Errors from the service show up
 * here with a retry hook instead of interrupting the page.
 */

const $ = <T extends Element>(root: ParentNode, sel: string): T => {
  const el = root.querySelector<T>(sel);
  if (!el) throw new Error(`missing element: ${sel}`);
  return el;
};

export const escapeHtml = (s: string): string =>
  s
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');

export interface ToastOptions {
  retry?: () => void;
  /** ms until auto-dismiss; 0 keeps the toast until clicked away. */
  ttl?: number;
}

export class ToastStack {
  constructor(private readonly host: HTMLElement) {
    host.classList.add('toast-stack');
  }

  show(message: string, opts: ToastOptions = {}): HTMLElement {
    const toast = document.createElement('div');
    toast.className = 'toast';
    toast.setAttribute('role', 'alert');
    toast.innerHTML = `
      <span class="toast-message">${escapeHtml(message)}</span>
      ${opts.retry ? '<button type="button" class="toast-retry">Retry</button>' : ''}
      <button type="button" class="toast-dismiss" aria-label="Dismiss">&times;</button>
    `;
    if (opts.retry) {
      const retry = opts.retry;
      $<HTMLButtonElement>(toast, '.toast-retry').addEventListener('click', () => {
        toast.remove();
        retry();
      });
    }
    $<HTMLButtonElement>(toast, '.toast-dismiss').addEventListener('click', () => toast.remove());
    this.host.appendChild(toast);
    const ttl = opts.ttl ?? 8000;
    if (ttl > 0) setTimeout(() => toast.remove(), ttl);
    return toast;
  }

  clear(): void {
    this.host.replaceChildren();
  }
}
