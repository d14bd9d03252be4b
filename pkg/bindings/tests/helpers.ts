import { execFileSync } from 'node:child_process'
import { join, basename } from 'node:path'

import { readNpy, type BoundImage, type BoundMask } from '../src/index.js'

/** The engine under test runs from the repo checkout one level up. */
export const ENGINE_CMD = ['python3', '-m', 'fdapipe.cli']

export function cli(...args: string[]): void {
  execFileSync(ENGINE_CMD[0], [...ENGINE_CMD.slice(1), ...args], {
    stdio: ['ignore', 'pipe', 'inherit'],
  })
}

export function loadImage(path: string): BoundImage {
  const arr = readNpy(path)
  if (arr.dtype !== 'f8' || arr.shape.length !== 3) {
    throw new Error(`expected H x W x C float64 npy at ${path}`)
  }
  return {
    height: arr.shape[0],
    width: arr.shape[1],
    channels: arr.shape[2],
    data: arr.data as Float64Array,
  }
}

export function loadMask(path: string): BoundMask {
  const arr = readNpy(path)
  if (arr.dtype !== 'i4' || arr.shape.length !== 2) {
    throw new Error(`expected H x W int32 npy at ${path}`)
  }
  return { height: arr.shape[0], width: arr.shape[1], data: arr.data as Int32Array }
}

export function stem(path: string): string {
  return basename(path).replace(/\.[^.]+$/, '')
}

export function maxAbsDiff(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length) return Infinity
  let worst = 0
  for (let i = 0; i < a.length; i++) {
    const d = Math.abs(a[i] - b[i])
    if (d > worst) worst = d
  }
  return worst
}

/** Deterministic [0, 1] filler aligned to 8-bit steps, like decoded PNG. */
export function syntheticImage(seed: number, height: number, width: number): BoundImage {
  const data = new Float64Array(height * width * 3)
  let state = (seed >>> 0) || 1
  for (let i = 0; i < data.length; i++) {
    state = (state * 1664525 + 1013904223) >>> 0
    data[i] = Math.round((state / 0xffffffff) * 255) / 255
  }
  return { height, width, channels: 3, data }
}

export function syntheticMask(seed: number, height: number, width: number): BoundMask {
  const data = new Int32Array(height * width)
  let state = (seed >>> 0) || 1
  for (let i = 0; i < data.length; i++) {
    state = (state * 1664525 + 1013904223) >>> 0
    data[i] = state % 3
  }
  return { height, width, data }
}

export function fixturePaths(tmp: string) {
  return {
    fixtures: join(tmp, 'fx'),
    config: join(tmp, 'run.cfg'),
    output: join(tmp, 'out'),
  }
}
