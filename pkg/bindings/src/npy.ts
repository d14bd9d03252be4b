/**
 * Minimal .npy (format version 1.0) codec for the two dtypes crossing the
 * engine boundary: little-endian float64 images and int32 masks, C-order.
 */

import { readFileSync, writeFileSync } from 'node:fs'

const MAGIC = Buffer.from('\x93NUMPY', 'latin1')

export interface NpyArray {
  dtype: 'f8' | 'i4'
  shape: number[]
  data: Float64Array | Int32Array
}

export function parseNpy(raw: Buffer): NpyArray {
  if (!raw.subarray(0, 6).equals(MAGIC)) {
    throw new Error('not an npy file')
  }
  const headerLen = raw.readUInt16LE(8)
  const header = raw.subarray(10, 10 + headerLen).toString('latin1')
  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1]
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1]
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1]
  if (!descr || !fortran || shapeText === undefined) {
    throw new Error(`unparseable npy header: ${header}`)
  }
  if (fortran === 'True') {
    throw new Error('fortran-order arrays are not supported')
  }
  const shape = shapeText
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10))
  const count = shape.reduce((a, b) => a * b, 1)
  const body = raw.subarray(10 + headerLen)
  if (descr === '<f8') {
    const data = new Float64Array(count)
    new Uint8Array(data.buffer).set(body.subarray(0, count * 8))
    return { dtype: 'f8', shape, data }
  }
  if (descr === '<i4') {
    const data = new Int32Array(count)
    new Uint8Array(data.buffer).set(body.subarray(0, count * 4))
    return { dtype: 'i4', shape, data }
  }
  throw new Error(`unsupported npy dtype ${descr}`)
}

export function readNpy(path: string): NpyArray {
  return parseNpy(readFileSync(path))
}

export function encodeNpy(arr: NpyArray): Buffer {
  const descr = arr.dtype === 'f8' ? '<f8' : '<i4'
  const shape = arr.shape.length === 1 ? `(${arr.shape[0]},)` : `(${arr.shape.join(', ')})`
  let header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shape}, }`
  const unpadded = 10 + header.length + 1
  header = header + ' '.repeat((64 - (unpadded % 64)) % 64) + '\n'
  const head = Buffer.alloc(10 + header.length)
  MAGIC.copy(head, 0)
  head.writeUInt8(1, 6)
  head.writeUInt8(0, 7)
  head.writeUInt16LE(header.length, 8)
  head.write(header, 10, 'latin1')
  const body = Buffer.from(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength)
  return Buffer.concat([head, body])
}

export function writeNpy(path: string, arr: NpyArray): void {
  writeFileSync(path, encodeNpy(arr))
}
