/**
 * Bindings for the fdapipe engine.
 *
 * An {@link Engine} spawns `fdapipe serve` and exposes the per-sample
 * transform, schedule evaluation, chained augmentation mixing, and
 * corruption generation to data-loading code without materializing
 * epochs to disk.  All randomness stays on the engine side, derived
 * from the seed lineage fields, so results are bit-identical to the
 * materializing pipeline for the same (seed, epoch, sample index).
 *
 * The ABI string in the engine's greeting is checked at load; a
 * mismatch fails fast instead of producing silently different rasters.
 *
 * @example
 * ```ts
 * const engine = await Engine.spawn()
 * const transform = engine.bindTransform({ seed: 7, epochs: 100, betaOpt: 0.006, alpha: 1.0 })
 * const { image, mask } = await transform(epoch, index, src, srcMask, tgt)
 * await engine.close()
 * ```
 */

import { FrameChannel, type Frame, type WireBuffer } from './protocol.js'

export const EXPECTED_ABI = 'fdapipe/1'

/** Contiguous row-major H x W x C image with values in [0, 1]. */
export interface BoundImage {
  height: number
  width: number
  channels: number
  data: Float64Array
}

/** Contiguous row-major H x W integer label mask (0 = background). */
export interface BoundMask {
  height: number
  width: number
  data: Int32Array
}

export interface RunSettings {
  seed: number
  epochs: number
  epochRatio?: number
  scheduler?: 'linear' | 'exponential' | 'anti_linear' | 'anti_exponential' | 'random'
  betaOpt?: number
  gamma?: number
  alpha?: number
  augment?: boolean
  augLevel?: number
  augChains?: number
  augDepth?: number
}

export interface AugSettings {
  chains?: number
  depth?: number
  level?: number
}

/** Test hook mirroring the engine's injectable mixing coefficients. */
export interface MixWeights {
  m: number
  w: number[]
}

export interface TransformResult {
  image: BoundImage
  mask?: BoundMask
  meta: Record<string, unknown>
}

export interface EngineOptions {
  /** Command line for the engine process (default: `fdapipe serve`). */
  command?: string[]
  expectedAbi?: string
}

export type BoundTransform = (
  epoch: number,
  sampleIndex: number,
  src: BoundImage,
  mask: BoundMask | null,
  tgt: BoundImage,
  coefficients?: MixWeights,
) => Promise<TransformResult>

export class Engine {
  private constructor(
    private readonly channel: FrameChannel,
    readonly abi: string,
    readonly version: string,
  ) {}

  /** Spawn the engine and verify its ABI greeting. */
  static async spawn(options: EngineOptions = {}): Promise<Engine> {
    const command = options.command ?? ['fdapipe', 'serve']
    const expected = options.expectedAbi ?? EXPECTED_ABI
    const channel = FrameChannel.open(command)
    const hello = await channel.next()
    const identity = hello.header.hello as { abi?: string; version?: string } | undefined
    if (!identity || identity.abi !== expected) {
      channel.close()
      throw new Error(
        `engine ABI mismatch: expected ${expected}, got ${identity?.abi ?? 'none'}`,
      )
    }
    return new Engine(channel, identity.abi, identity.version ?? 'unknown')
  }

  /** Scheduled fusion coefficient for one epoch. */
  async scheduleBeta(settings: RunSettings, epoch: number): Promise<number> {
    const reply = await this.roundTrip({
      op: 'schedule_beta',
      cfg: {
        beta_opt: settings.betaOpt ?? 0.006,
        epoch_ratio: settings.epochRatio ?? 0.5,
        epochs: settings.epochs,
        kind: settings.scheduler ?? 'linear',
        gamma: settings.gamma ?? 5.0,
      },
      seed: settings.seed,
      epoch,
    })
    return reply.header.beta as number
  }

  /**
   * Bind the full per-sample transform (fusion at the scheduled
   * coefficient, then chained augmentation mixing) to a fixed run
   * configuration.  Two transforms bound to different configs share
   * nothing but the process.
   */
  bindTransform(settings: RunSettings): BoundTransform {
    const cfg = runSettingsToWire(settings)
    return async (epoch, sampleIndex, src, mask, tgt, coefficients) => {
      const buffers: WireBuffer[] = [imageBuffer(src), imageBuffer(tgt)]
      if (mask !== null && mask !== undefined) buffers.push(maskBuffer(mask))
      const reply = await this.roundTrip(
        {
          op: 'transform',
          cfg,
          epoch,
          sample_index: sampleIndex,
          coefficients: coefficients ?? null,
        },
        buffers,
      )
      return unpackTransform(reply, src.height, src.width, src.channels)
    }
  }

  /** Chained augmentation mixing alone, outside the fusion schedule. */
  async chainedAugmix(
    policy: AugSettings,
    lineage: { seed: number; epoch?: number; sampleIndex?: number },
    img: BoundImage,
    mask?: BoundMask,
  ): Promise<TransformResult> {
    const buffers: WireBuffer[] = [imageBuffer(img)]
    if (mask) buffers.push(maskBuffer(mask))
    const reply = await this.roundTrip(
      {
        op: 'augmix',
        policy: { chains: policy.chains ?? 3, depth: policy.depth ?? 3, level: policy.level ?? 3 },
        seed: lineage.seed,
        epoch: lineage.epoch ?? 0,
        sample_index: lineage.sampleIndex ?? 0,
      },
      buffers,
    )
    return unpackTransform(reply, img.height, img.width, img.channels)
  }

  /** One corruption kind at one severity, deterministic per seed. */
  async corrupt(
    kind: string,
    severity: number,
    seed: number,
    img: BoundImage,
  ): Promise<BoundImage> {
    const reply = await this.roundTrip(
      { op: 'corrupt', kind, severity, seed },
      [imageBuffer(img)],
    )
    return {
      height: img.height,
      width: img.width,
      channels: img.channels,
      data: reply.buffers[0] as Float64Array,
    }
  }

  async ping(): Promise<boolean> {
    const reply = await this.roundTrip({ op: 'ping' })
    return reply.header.ok === true
  }

  async close(): Promise<void> {
    try {
      await this.channel.request({ op: 'shutdown' })
    } catch {
      // already gone
    }
    this.channel.close()
  }

  private async roundTrip(
    header: Record<string, unknown>,
    buffers: WireBuffer[] = [],
  ): Promise<Frame> {
    const reply = await this.channel.request(header, buffers)
    if (reply.header.ok !== true) {
      throw new Error(`engine error: ${reply.header.error ?? 'unknown'}`)
    }
    return reply
  }
}

export function imageBuffer(img: BoundImage): WireBuffer {
  if (img.data.length !== img.height * img.width * img.channels) {
    throw new Error(
      `image buffer length ${img.data.length} != ${img.height}x${img.width}x${img.channels}`,
    )
  }
  return { data: img.data, shape: [img.height, img.width, img.channels] }
}

export function maskBuffer(mask: BoundMask): WireBuffer {
  if (mask.data.length !== mask.height * mask.width) {
    throw new Error(`mask buffer length ${mask.data.length} != ${mask.height}x${mask.width}`)
  }
  return { data: mask.data, shape: [mask.height, mask.width] }
}

function unpackTransform(
  reply: Frame,
  height: number,
  width: number,
  channels: number,
): TransformResult {
  const image: BoundImage = {
    height,
    width,
    channels,
    data: reply.buffers[0] as Float64Array,
  }
  const result: TransformResult = {
    image,
    meta: (reply.header.meta ?? {}) as Record<string, unknown>,
  }
  if (reply.buffers.length > 1) {
    result.mask = { height, width, data: reply.buffers[1] as Int32Array }
  }
  return result
}

function runSettingsToWire(settings: RunSettings): Record<string, unknown> {
  return {
    seed: settings.seed,
    epochs: settings.epochs,
    epoch_ratio: settings.epochRatio ?? 0.5,
    scheduler: settings.scheduler ?? 'linear',
    beta_opt: settings.betaOpt ?? 0.006,
    gamma: settings.gamma ?? 5.0,
    alpha: settings.alpha ?? 1.0,
    augment: settings.augment ?? true,
    aug_level: settings.augLevel ?? 3,
    aug_chains: settings.augChains ?? 3,
    aug_depth: settings.augDepth ?? 3,
  }
}

export { readNpy, writeNpy, parseNpy, encodeNpy, type NpyArray } from './npy.js'
export { FrameChannel, type Frame, type WireBuffer } from './protocol.js'
