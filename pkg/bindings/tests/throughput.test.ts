import { afterAll, beforeAll, expect, it } from 'vitest'

import { Engine, type BoundTransform } from '../src/index.js'
import { ENGINE_CMD, syntheticImage } from './helpers.js'

let engine: Engine
let transform: BoundTransform

beforeAll(async () => {
  engine = await Engine.spawn({ command: [...ENGINE_CMD, 'serve'] })
  transform = engine.bindTransform({
    seed: 33,
    epochs: 10,
    epochRatio: 0.5,
    betaOpt: 0.006,
    alpha: 1.0,
  })
})

afterAll(async () => {
  await engine?.close()
})

it('100 full-size calls stay within the materializing pipeline budget', async () => {
  const src = syntheticImage(1, 384, 384)
  const tgt = syntheticImage(2, 384, 384)
  const start = performance.now()
  for (let i = 0; i < 100; i++) {
    const { image } = await transform(5, i, src, null, tgt)
    if (image.data.length !== 384 * 384 * 3) throw new Error('bad output size')
  }
  const elapsed = performance.now() - start
  expect(elapsed).toBeLessThan(10_000)
})
