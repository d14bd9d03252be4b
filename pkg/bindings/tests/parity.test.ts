/**
 * Bit-exact parity between the bound transform and the materializing
 * pipeline: identical seed lineage must give identical float rasters.
 */

import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, expect, it } from 'vitest'

import { Engine, readNpy, type BoundTransform } from '../src/index.js'
import {
  ENGINE_CMD,
  cli,
  fixturePaths,
  loadImage,
  loadMask,
  maxAbsDiff,
  stem,
} from './helpers.js'

interface ManifestRow {
  index: number
  source: string
  target: string
  output: string
  beta: number
  m: number
  w: number[]
}

const SETTINGS = {
  seed: 21,
  epochs: 8,
  epochRatio: 0.5,
  scheduler: 'linear' as const,
  betaOpt: 0.4,
  alpha: 0.9,
  augLevel: 3,
}

let tmp: string
let engine: Engine
let transform: BoundTransform
let rows: ManifestRow[]

beforeAll(async () => {
  tmp = mkdtempSync(join(tmpdir(), 'fdapipe-bindings-'))
  const { fixtures, config, output } = fixturePaths(tmp)
  cli(
    'make-fixtures', '--out', fixtures, '--seed', '5',
    '--count', '10', '--height', '24', '--width', '24', '--npy',
  )
  writeFileSync(
    config,
    [
      'seed = 21',
      'epochs = 8',
      'epoch_ratio = 0.5',
      'scheduler = linear',
      'beta_opt = 0.4',
      'alpha = 0.9',
      'augment = true',
      'aug_level = 3',
      'image_height = 24',
      'image_width = 24',
      `source_images = ${join(fixtures, 'source')}`,
      `source_masks = ${join(fixtures, 'source_masks')}`,
      `target_images = ${join(fixtures, 'target')}`,
      `output_root = ${output}`,
      '',
    ].join('\n'),
  )
  cli('epoch', '--config', config, '--epoch', '3', '--float-dump')
  rows = readFileSync(join(output, 'epoch_003', 'manifest.jsonl'), 'utf-8')
    .trim()
    .split('\n')
    .map((line) => JSON.parse(line) as ManifestRow)

  engine = await Engine.spawn({ command: [...ENGINE_CMD, 'serve'] })
  transform = engine.bindTransform(SETTINGS)
})

afterAll(async () => {
  await engine?.close()
})

it('reproduces the materialized epoch float rasters with zero difference', async () => {
  expect(rows).toHaveLength(10)
  const { fixtures, output } = fixturePaths(tmp)
  for (const row of rows) {
    const src = loadImage(join(fixtures, 'source_npy', `${stem(row.source)}.npy`))
    const mask = loadMask(join(fixtures, 'source_npy', `${stem(row.source)}_mask.npy`))
    const tgt = loadImage(join(fixtures, 'target_npy', `${stem(row.target)}.npy`))

    const result = await transform(3, row.index, src, mask, tgt)

    const dumped = readNpy(join(output, 'epoch_003', row.output.replace(/\.png$/, '.npy')))
    expect(maxAbsDiff(result.image.data, dumped.data as Float64Array)).toBe(0)

    const dumpedMask = readNpy(
      join(output, 'epoch_003', row.output.replace(/\.png$/, '_mask.npy')),
    )
    expect(result.mask).toBeDefined()
    expect(
      Buffer.from(result.mask!.data.buffer).equals(
        Buffer.from((dumpedMask.data as Int32Array).buffer),
      ),
    ).toBe(true)

    expect(result.meta.beta).toBe(row.beta)
    expect(result.meta.m).toBe(row.m)
    expect(result.meta.w).toEqual(row.w)
  }
})

it('returns the source image untouched at epoch 0 with injected identity weights', async () => {
  const { fixtures } = fixturePaths(tmp)
  const src = loadImage(join(fixtures, 'source_npy', 's0000.npy'))
  const mask = loadMask(join(fixtures, 'source_npy', 's0000_mask.npy'))
  const tgt = loadImage(join(fixtures, 'target_npy', 't0001.npy'))

  const result = await transform(0, 0, src, mask, tgt, { m: 1.0, w: [1 / 3, 1 / 3, 1 / 3] })

  expect(maxAbsDiff(result.image.data, src.data)).toBe(0)
  expect(
    Buffer.from(result.mask!.data.buffer).equals(Buffer.from(mask.data.buffer)),
  ).toBe(true)
  expect(result.meta.beta).toBe(0)
})
