// Bootstrap: mount the console against the review service.
// Base URL precedence: ?api= query param, then same-origin (the service
// mounts the built console at /ui).

import { ReviewClient } from './api.js';
import { Console } from './app.js';

const root = document.querySelector<HTMLDivElement>('#app');
if (!root) throw new Error('missing <div id="app"></div>');

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get('api') ?? window.location.origin;

const console_ = new Console(root, new ReviewClient(baseUrl));
void console_.init();
