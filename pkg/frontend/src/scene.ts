// Minimal dependency-free 3-D glyphs: a hand/gripper is drawn as a palm
// triad (position + orientation axes) with one bar per finger whose length
// follows the aperture. Geometry is produced as line segments and projected
// with a fixed-tilt orthographic camera; the canvas layer just strokes them.

import type { Features } from "./protocol.js";
import { featureArray } from "./protocol.js";

export type Vec3 = [number, number, number];
export interface Segment {
    a: Vec3;
    b: Vec3;
    stroke: string;
}

// Rodrigues rotation of v around the axis-angle vector r.
export function rotate(v: Vec3, r: Vec3): Vec3 {
    const angle = Math.hypot(r[0], r[1], r[2]);
    if (angle === 0) return [...v];
    const k: Vec3 = [r[0] / angle, r[1] / angle, r[2] / angle];
    const cos = Math.cos(angle);
    const sin = Math.sin(angle);
    const cross: Vec3 = [
        k[1] * v[2] - k[2] * v[1],
        k[2] * v[0] - k[0] * v[2],
        k[0] * v[1] - k[1] * v[0],
    ];
    const dot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    return [
        v[0] * cos + cross[0] * sin + k[0] * dot * (1 - cos),
        v[1] * cos + cross[1] * sin + k[1] * dot * (1 - cos),
        v[2] * cos + cross[2] * sin + k[2] * dot * (1 - cos),
    ];
}

const AXIS_COLORS = ["#e05c5c", "#58b858", "#5c7ee0"];

export function handGlyph(features: Features, stroke: string): Segment[] {
    const flat = featureArray(features);
    if (flat.length < 6) {
        // raw low-dimensional fixtures: nothing sensible to draw
        return [];
    }
    const origin: Vec3 = [flat[0]!, flat[1]!, flat[2]!];
    const rot: Vec3 = [flat[3]!, flat[4]!, flat[5]!];
    const apertures = flat.slice(6);
    const segments: Segment[] = [];
    const axisLen = 0.12;
    const axes: Vec3[] = [
        [axisLen, 0, 0],
        [0, axisLen, 0],
        [0, 0, axisLen],
    ];
    axes.forEach((axis, i) => {
        const tip = rotate(axis, rot);
        segments.push({
            a: origin,
            b: [origin[0] + tip[0], origin[1] + tip[1], origin[2] + tip[2]],
            stroke: AXIS_COLORS[i]!,
        });
    });
    const n = apertures.length;
    apertures.forEach((open, i) => {
        const spread = n === 1 ? 0 : (i / (n - 1) - 0.5) * 0.12;
        // aperture 0 = fully open = long finger bar
        const reach = 0.05 + 0.1 * (1 - open!);
        const base = rotate([spread, 0.04, 0], rot);
        const tip = rotate([spread, 0.04 + reach, 0], rot);
        segments.push({
            a: [origin[0] + base[0], origin[1] + base[1], origin[2] + base[2]],
            b: [origin[0] + tip[0], origin[1] + tip[1], origin[2] + tip[2]],
            stroke,
        });
    });
    return segments;
}

export interface Camera {
    yaw: number;
    pitch: number;
    scale: number;
    cx: number;
    cy: number;
}

export function project(p: Vec3, cam: Camera): [number, number] {
    const cy = Math.cos(cam.yaw);
    const sy = Math.sin(cam.yaw);
    const cp = Math.cos(cam.pitch);
    const sp = Math.sin(cam.pitch);
    const x1 = cy * p[0] + sy * p[1];
    const y1 = -sy * p[0] + cy * p[1];
    const z2 = sp * y1 + cp * p[2];
    return [cam.cx + cam.scale * x1, cam.cy - cam.scale * z2];
}
