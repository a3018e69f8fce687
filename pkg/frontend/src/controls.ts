import type { ClientCommand, TransformOp, Vec3 } from "./protocol.js";

/** Absolute object pose the control panel edits; converted to a transform
 * op list on every change (the bridge replaces, it does not accumulate). */
export interface TransformControls {
  scale: number;
  rotateAxis: Vec3;
  rotateDeg: number;
  translate: Vec3;
}

export const defaultTransform = (): TransformControls => ({
  scale: 1,
  rotateAxis: [0, 1, 0],
  rotateDeg: 0,
  translate: [0, 0, 0],
});

/** Scale and rotation act about the workspace center so the object stays in
 * place while it grows or spins; translation applies last. */
export function transformOps(t: TransformControls, center: Vec3): TransformOp[] {
  const ops: TransformOp[] = [];
  const needsCentering = t.scale !== 1 || t.rotateDeg !== 0;
  if (needsCentering) {
    ops.push({ translate_m: [-center[0], -center[1], -center[2]] });
    if (t.scale !== 1) ops.push({ scale: t.scale });
    if (t.rotateDeg !== 0) ops.push({ rotate: { axis: t.rotateAxis, angle_deg: t.rotateDeg } });
    ops.push({ translate_m: [center[0], center[1], center[2]] });
  }
  if (t.translate.some((v) => v !== 0)) {
    ops.push({ translate_m: t.translate });
  }
  return ops;
}

export function transformCommand(t: TransformControls, center: Vec3): ClientCommand {
  return { type: "set_transform", ops: transformOps(t, center) };
}

export function frictionCommand(muS: number, muD: number, enabled: boolean): ClientCommand {
  return { type: "set_friction", mu_s: muS, mu_d: muD, enabled };
}

export function resetCommand(): ClientCommand {
  return { type: "reset" };
}
