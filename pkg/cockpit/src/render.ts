/**
 * Canvas wireframe rendering of the scene and arm, plus the synthetic
 * needle-axis inset. Everything drawn comes from server telemetry (link
 * capsules are posed server-side); the camera is the only local state.
 */

import { HeatPoint, heatColor } from "./heatmap.js";
import { CapsuleDesc, SceneDesc, StateMessage, Vec3 } from "./protocol.js";

type Mat3 = [Vec3, Vec3, Vec3];

function matVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
    m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
    m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
  ];
}

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export class Camera {
  yaw = 0.7;
  pitch = 0.35;
  distance = 1.6;
  target: Vec3 = [0, 0, 0.1];

  /** World point -> view coordinates (x right, y up, z toward viewer). */
  toView(p: Vec3): Vec3 {
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    const d = sub(p, this.target);
    // Yaw about world y, then pitch about camera x.
    const x = cy * d[0] - sy * d[2];
    const z1 = sy * d[0] + cy * d[2];
    const y = cp * d[1] - sp * z1;
    const z = sp * d[1] + cp * z1;
    return [x, y, z];
  }
}

export class SceneView {
  private ctx: CanvasRenderingContext2D;
  private inset: CanvasRenderingContext2D | null;
  readonly camera = new Camera();
  heatmap: HeatPoint[] = [];

  constructor(canvas: HTMLCanvasElement, insetCanvas?: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("2d canvas context unavailable");
    }
    this.ctx = ctx;
    this.inset = insetCanvas ? insetCanvas.getContext("2d") : null;
  }

  private project(p: Vec3): [number, number, number] {
    const view = this.camera.toView(p);
    const canvas = this.ctx.canvas;
    const scale = (0.9 * Math.min(canvas.width, canvas.height)) /
      Math.max(0.2, this.camera.distance);
    return [
      canvas.width / 2 + view[0] * scale,
      canvas.height / 2 - view[1] * scale,
      scale,
    ];
  }

  private strokeCapsule(cap: CapsuleDesc, color: string, fill = false): void {
    const [ax, ay, s] = this.project(cap.a);
    const [bx, by] = this.project(cap.b);
    const r = Math.max(1.5, cap.radius * s);
    const ctx = this.ctx;
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.lineWidth = 2 * r;
    ctx.lineCap = "round";
    ctx.globalAlpha = fill ? 0.35 : 0.9;
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
    ctx.globalAlpha = 1.0;
    ctx.lineWidth = 1;
  }

  private strokeBoreRing(center: Vec3, axis: Vec3, radius: number, color: string): void {
    // Orthonormal disk basis around the axis.
    const ref: Vec3 = Math.abs(axis[1]) < 0.9 ? [0, 1, 0] : [1, 0, 0];
    const u: Vec3 = [
      axis[1] * ref[2] - axis[2] * ref[1],
      axis[2] * ref[0] - axis[0] * ref[2],
      axis[0] * ref[1] - axis[1] * ref[0],
    ];
    const un = Math.hypot(u[0], u[1], u[2]);
    const uu: Vec3 = [u[0] / un, u[1] / un, u[2] / un];
    const vv: Vec3 = [
      axis[1] * uu[2] - axis[2] * uu[1],
      axis[2] * uu[0] - axis[0] * uu[2],
      axis[0] * uu[1] - axis[1] * uu[0],
    ];
    const ctx = this.ctx;
    ctx.strokeStyle = color;
    ctx.beginPath();
    const steps = 48;
    for (let i = 0; i <= steps; i++) {
      const t = (2 * Math.PI * i) / steps;
      const p: Vec3 = [
        center[0] + radius * (Math.cos(t) * uu[0] + Math.sin(t) * vv[0]),
        center[1] + radius * (Math.cos(t) * uu[1] + Math.sin(t) * vv[1]),
        center[2] + radius * (Math.cos(t) * uu[2] + Math.sin(t) * vv[2]),
      ];
      const [x, y] = this.project(p);
      if (i === 0) {
        ctx.moveTo(x, y);
      } else {
        ctx.lineTo(x, y);
      }
    }
    ctx.stroke();
  }

  render(scene: SceneDesc | null, state: StateMessage | null): void {
    const ctx = this.ctx;
    const { width, height } = ctx.canvas;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, width, height);

    if (scene?.bore) {
      const { center, axis, inner_radius, length } = scene.bore;
      const half = length / 2;
      for (const sgn of [-1, 1]) {
        const ring: Vec3 = [
          center[0] + sgn * half * axis[0],
          center[1] + sgn * half * axis[1],
          center[2] + sgn * half * axis[2],
        ];
        this.strokeBoreRing(ring, axis, inner_radius, "#3b4a63");
      }
      this.strokeBoreRing(center, axis, inner_radius, "#2c3850");
    }
    if (scene?.table) {
      const { center, half_extents } = scene.table;
      const cap: CapsuleDesc = {
        name: "table",
        a: [center[0] - half_extents[0], center[1], center[2]],
        b: [center[0] + half_extents[0], center[1], center[2]],
        radius: half_extents[1],
      };
      this.strokeCapsule(cap, "#31405c", true);
    }
    for (const cap of scene?.patient ?? []) {
      this.strokeCapsule(cap, "#3f6b5a", true);
    }
    for (const point of this.heatmap) {
      const [x, y] = this.project(point.position);
      ctx.fillStyle = heatColor(point.percentage);
      ctx.globalAlpha = 0.8;
      ctx.fillRect(x - 1.5, y - 1.5, 3, 3);
      ctx.globalAlpha = 1.0;
    }
    if (state) {
      for (const cap of state.links) {
        const hot = cap.name === "needle" ? "#e8ddb0" : "#7d9bd1";
        this.strokeCapsule(cap, hot);
      }
      this.renderInset(scene, state);
    }
  }

  /** First-person view down the needle axis: crosshair plus patient rings. */
  private renderInset(scene: SceneDesc | null, state: StateMessage): void {
    const ctx = this.inset;
    if (!ctx) {
      return;
    }
    const { width, height } = ctx.canvas;
    ctx.fillStyle = "#0a0d12";
    ctx.fillRect(0, 0, width, height);
    const R = state.tip_rotation;
    const tip = state.tip_position;
    // Columns of R are the tip axes in scene coordinates; view along +z.
    const Rt: Mat3 = [
      [R[0][0], R[1][0], R[2][0]],
      [R[0][1], R[1][1], R[2][1]],
      [R[0][2], R[1][2], R[2][2]],
    ];
    const scale = width / 0.22; // 22 cm field of view at unit depth
    const toInset = (p: Vec3): [number, number, number] => {
      const local = matVec(Rt, sub(p, tip));
      return [width / 2 + local[0] * scale, height / 2 - local[1] * scale, local[2]];
    };
    for (const cap of scene?.patient ?? []) {
      const [ax, ay, az] = toInset(cap.a);
      const [bx, by, bz] = toInset(cap.b);
      if (az < 0 && bz < 0) {
        continue; // behind the needle
      }
      ctx.strokeStyle = "#41705f";
      ctx.lineWidth = Math.max(1.5, cap.radius * scale * 0.5);
      ctx.globalAlpha = 0.6;
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
      ctx.globalAlpha = 1.0;
    }
    ctx.strokeStyle = "#d8e0ee";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(width / 2 - 12, height / 2);
    ctx.lineTo(width / 2 + 12, height / 2);
    ctx.moveTo(width / 2, height / 2 - 12);
    ctx.lineTo(width / 2, height / 2 + 12);
    ctx.stroke();
    ctx.strokeStyle = "#8a93a6";
    ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  }
}
