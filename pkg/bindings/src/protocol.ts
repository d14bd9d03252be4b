/**
 * Length-prefixed frame transport over a child process's stdio.
 *
 * A frame is a 4-byte little-endian header length, a JSON header, then
 * the raw bytes of every buffer the header declares (C-order, little-
 * endian, dtype 'f8' or 'i4').  Requests are serialized FIFO; the engine
 * answers one frame per request.
 */

import { spawn, type ChildProcessByStdio } from 'node:child_process'
import type { Readable, Writable } from 'node:stream'

export type WireArray = Float64Array | Int32Array

export interface WireBuffer {
  data: WireArray
  shape: number[]
}

export interface FrameHeader {
  [key: string]: unknown
  buffers?: { dtype: 'f8' | 'i4'; shape: number[] }[]
}

export interface Frame {
  header: FrameHeader
  buffers: WireArray[]
}

interface Waiter {
  resolve: (frame: Frame) => void
  reject: (err: Error) => void
}

export class FrameChannel {
  private pending: Buffer = Buffer.alloc(0)
  private waiters: Waiter[] = []
  private closed = false

  private constructor(
    private readonly child: ChildProcessByStdio<Writable, Readable, null>,
  ) {
    child.stdout.on('data', (chunk: Buffer) => this.onData(chunk))
    child.on('exit', () => this.failAll(new Error('engine process exited')))
    child.on('error', (err) => this.failAll(err))
  }

  static open(command: string[]): FrameChannel {
    const [prog, ...args] = command
    const child = spawn(prog, args, { stdio: ['pipe', 'pipe', 'inherit'] })
    return new FrameChannel(child)
  }

  /** Read the next frame without sending anything (the hello frame). */
  next(): Promise<Frame> {
    return new Promise((resolve, reject) => {
      this.waiters.push({ resolve, reject })
      this.drain()
    })
  }

  request(header: FrameHeader, buffers: WireBuffer[] = []): Promise<Frame> {
    const reply = this.next()
    this.write(header, buffers)
    return reply
  }

  write(header: FrameHeader, buffers: WireBuffer[] = []): void {
    if (this.closed) throw new Error('channel is closed')
    for (const b of buffers) {
      const count = b.shape.reduce((a, n) => a * n, 1)
      if (count !== b.data.length) {
        throw new Error(`buffer of length ${b.data.length} does not match shape ${b.shape}`)
      }
    }
    const withDescs: FrameHeader = {
      ...header,
      buffers: buffers.map((b) => ({
        dtype: b.data instanceof Int32Array ? ('i4' as const) : ('f8' as const),
        shape: b.shape,
      })),
    }
    const payload = Buffer.from(JSON.stringify(withDescs), 'utf-8')
    const prefix = Buffer.alloc(4)
    prefix.writeUInt32LE(payload.length, 0)
    this.child.stdin.write(prefix)
    this.child.stdin.write(payload)
    for (const b of buffers) {
      // typed arrays are already contiguous row-major bytes; they pass
      // through without re-layout
      this.child.stdin.write(Buffer.from(b.data.buffer, b.data.byteOffset, b.data.byteLength))
    }
  }

  close(): void {
    this.closed = true
    this.child.stdin.end()
    this.child.kill()
  }

  get exited(): Promise<number | null> {
    return new Promise((resolve) => this.child.on('exit', resolve))
  }

  private onData(chunk: Buffer): void {
    this.pending = this.pending.length ? Buffer.concat([this.pending, chunk]) : chunk
    this.drain()
  }

  private drain(): void {
    while (this.waiters.length > 0) {
      const frame = this.tryParse()
      if (frame === null) return
      const waiter = this.waiters.shift()!
      waiter.resolve(frame)
    }
  }

  private tryParse(): Frame | null {
    if (this.pending.length < 4) return null
    const headerLen = this.pending.readUInt32LE(0)
    if (this.pending.length < 4 + headerLen) return null
    const header = JSON.parse(
      this.pending.subarray(4, 4 + headerLen).toString('utf-8'),
    ) as FrameHeader
    const descs = header.buffers ?? []
    let total = 4 + headerLen
    const sizes = descs.map((d) => {
      const count = d.shape.reduce((a, b) => a * b, 1)
      return count * (d.dtype === 'i4' ? 4 : 8)
    })
    for (const s of sizes) total += s
    if (this.pending.length < total) return null

    let offset = 4 + headerLen
    const buffers: WireArray[] = descs.map((d, i) => {
      const bytes = this.pending.subarray(offset, offset + sizes[i])
      offset += sizes[i]
      if (d.dtype === 'i4') {
        const out = new Int32Array(sizes[i] / 4)
        new Uint8Array(out.buffer).set(bytes)
        return out
      }
      const out = new Float64Array(sizes[i] / 8)
      new Uint8Array(out.buffer).set(bytes)
      return out
    })
    this.pending = this.pending.subarray(total)
    return { header, buffers }
  }

  private failAll(err: Error): void {
    if (this.closed) return
    const waiters = this.waiters.splice(0)
    for (const w of waiters) w.reject(err)
  }
}
