import { describe, expect, it } from "vitest";

import { CONTROL_PATHS, TOP_LEVEL_KEYS } from "../src/schema";
import { makeScene } from "./mock_service";

describe("scene schema contract", () => {
  it("every control writes under a key the scene document has", () => {
    const scene = makeScene() as unknown as Record<string, unknown>;
    for (const path of Object.values(CONTROL_PATHS)) {
      const top = path.split(".")[0];
      expect(TOP_LEVEL_KEYS).toContain(top);
      expect(scene).toHaveProperty(top);
    }
  });

  it("the mock scene covers all top-level document keys", () => {
    const scene = makeScene() as unknown as Record<string, unknown>;
    expect(Object.keys(scene).sort()).toEqual([...TOP_LEVEL_KEYS].sort());
  });
});
