import { AnnotatorApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8080";

const app = new AnnotatorApp(document, baseUrl);
app.mount();

declare global {
  interface Window {
    annotator: AnnotatorApp;
  }
}
window.annotator = app;
