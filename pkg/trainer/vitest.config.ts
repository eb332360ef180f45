import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 900_000,
    hookTimeout: 120_000,
    // training and cross-implementation tests are long-running and CPU bound
    pool: "forks",
    maxConcurrency: 1,
  },
});
