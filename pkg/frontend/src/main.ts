import { ApiClient } from './api';
import { App } from './app';

declare global {
  interface Window {
    /** Optional runtime override for the API origin; same-origin by default. */
    YF_API_BASE?: string;
  }
}

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const api = new ApiClient(window.YF_API_BASE ?? '');
void new App(root, api).boot();
