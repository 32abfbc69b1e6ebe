import { App } from './app.js';

new App(document.getElementById('app') as HTMLElement).start();
