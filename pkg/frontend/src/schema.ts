/**
 * The scene-schema paths each control writes.  Kept as a single table
 * so a snapshot test can pin the UI-to-service contract.
 */

export const CONTROL_PATHS: Record<string, string> = {
  tf_editor: "transfer_function",
  base_color: "material.base_color",
  metallic: "material.metallic",
  roughness: "material.roughness",
  specular: "material.specular",
  light_list: "area_lights",
  background_mode: "background.mode",
  background_enabled: "background.enabled",
  background_intensity: "background.intensity_scale",
  orbit: "camera.position",
  pan: "camera.target",
  projection: "camera.projection",
  clip_planes: "clip_planes",
};

/** Top-level document keys the service accepts in patches. */
export const TOP_LEVEL_KEYS = [
  "volume",
  "smoothing",
  "transfer_function",
  "material",
  "area_lights",
  "background",
  "camera",
  "clip_planes",
  "cuts",
  "render",
];
