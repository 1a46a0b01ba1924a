import { defineConfig } from "vite";

// Served by the API process under /ui (see ADHERE_UI_DIR); dev mode proxies
// API calls to a locally running server.
export default defineConfig({
  base: "/ui/",
  server: {
    proxy: {
      "/patients": "http://127.0.0.1:8000",
      "/labs": "http://127.0.0.1:8000",
      "/cohort": "http://127.0.0.1:8000",
      "/health": "http://127.0.0.1:8000",
      "/admin": "http://127.0.0.1:8000",
    },
  },
});
