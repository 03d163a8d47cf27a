import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // full pipeline runs compile, trace, and patch five binaries
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
