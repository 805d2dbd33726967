// Slider-to-feature mapping. Every slider reports a normalized value in
// [0, 1]; pose sliders (position and orientation) map linearly onto the
// configured workspace bounds, aperture sliders map directly onto [0, 1]
// (0 = fully open), matching the feature units the service expects.

import type { StructuredFeatures } from "./protocol.js";

export interface Bounds {
    lower: number[];
    upper: number[];
}

export type SliderKind = "position" | "orientation" | "aperture";

export interface SliderSpec {
    index: number; // feature index in the flat layout
    kind: SliderKind;
    label: string;
}

const POSITION_AXES = ["x", "y", "z"];
const ORIENTATION_AXES = ["rx", "ry", "rz"];

export function sliderSpecs(nApertures: number): SliderSpec[] {
    const specs: SliderSpec[] = [];
    for (let i = 0; i < 3; i++) {
        specs.push({ index: i, kind: "position", label: `position ${POSITION_AXES[i]}` });
    }
    for (let i = 0; i < 3; i++) {
        specs.push({
            index: 3 + i,
            kind: "orientation",
            label: `orientation ${ORIENTATION_AXES[i]}`,
        });
    }
    for (let i = 0; i < nApertures; i++) {
        specs.push({ index: 6 + i, kind: "aperture", label: `aperture ${i + 1}` });
    }
    return specs;
}

export function featuresFromSliders(
    sliders: number[],
    bounds: Bounds,
    nApertures: number,
): StructuredFeatures {
    const d = 6 + nApertures;
    if (sliders.length !== d) {
        throw new Error(`expected ${d} slider values, got ${sliders.length}`);
    }
    if (bounds.lower.length !== d || bounds.upper.length !== d) {
        throw new Error(`bounds must have ${d} entries`);
    }
    const pose = (i: number) => {
        const lo = bounds.lower[i]!;
        const hi = bounds.upper[i]!;
        return lo + sliders[i]! * (hi - lo);
    };
    return {
        position: [pose(0), pose(1), pose(2)],
        orientation: [pose(3), pose(4), pose(5)],
        apertures: sliders.slice(6).map((s) => s),
    };
}

export function slidersFromFeatures(
    features: StructuredFeatures,
    bounds: Bounds,
): number[] {
    const flat = [...features.position, ...features.orientation];
    const sliders = flat.map((v, i) => {
        const lo = bounds.lower[i]!;
        const hi = bounds.upper[i]!;
        return hi === lo ? 0 : (v - lo) / (hi - lo);
    });
    return [...sliders, ...features.apertures];
}
