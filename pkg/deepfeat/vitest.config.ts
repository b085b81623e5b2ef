import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // backbone construction and cross-language subprocess checks are slow
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
