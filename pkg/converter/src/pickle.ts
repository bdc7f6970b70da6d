/**
 * Minimal Python-pickle reader for the upstream polyphonic-music archives.
 *
 * The archives are pickled dicts mapping split names to lists of
 * sequences of MIDI-pitch tuples, so only the container, integer, and
 * string opcodes are needed. Protocols 0 through 5 are accepted for
 * those opcodes; anything else raises with the opcode named.
 *
 * Lists and tuples both become arrays, dicts become plain objects with
 * string keys, ints become numbers (bigints outside the safe range are
 * rejected).
 */

export class PickleError extends Error {}

const MARK = Symbol("mark");

export function loads(data: Buffer): unknown {
  const stack: unknown[] = [];
  const memo = new Map<number, unknown>();
  let pos = 0;

  const u8 = () => data.readUInt8(pos++);
  const u16 = () => {
    const v = data.readUInt16LE(pos);
    pos += 2;
    return v;
  };
  const i32 = () => {
    const v = data.readInt32LE(pos);
    pos += 4;
    return v;
  };
  const u32 = () => {
    const v = data.readUInt32LE(pos);
    pos += 4;
    return v;
  };
  const bytes = (n: number) => {
    const v = data.subarray(pos, pos + n);
    if (v.length !== n) throw new PickleError("truncated pickle");
    pos += n;
    return v;
  };
  const line = () => {
    const end = data.indexOf(0x0a, pos);
    if (end < 0) throw new PickleError("unterminated text opcode");
    const v = data.toString("latin1", pos, end);
    pos = end + 1;
    return v;
  };

  const popMark = (): unknown[] => {
    const idx = stack.lastIndexOf(MARK);
    if (idx < 0) throw new PickleError("no MARK on stack");
    const items = stack.splice(idx + 1);
    stack.pop(); // the mark itself
    return items;
  };

  const setPairs = (target: Record<string, unknown>, items: unknown[]) => {
    for (let i = 0; i + 1 < items.length; i += 2) {
      target[keyOf(items[i])] = items[i + 1];
    }
  };

  const keyOf = (k: unknown): string => {
    if (typeof k === "string") return k;
    if (typeof k === "number") return String(k);
    throw new PickleError(`unsupported dict key type: ${typeof k}`);
  };

  const longFromLE = (raw: Buffer): number => {
    // little-endian two's complement of arbitrary width
    let value = 0n;
    for (let i = raw.length - 1; i >= 0; i--) value = (value << 8n) | BigInt(raw[i]);
    if (raw.length > 0 && raw[raw.length - 1] & 0x80) value -= 1n << BigInt(8 * raw.length);
    if (value > BigInt(Number.MAX_SAFE_INTEGER) || value < BigInt(-Number.MAX_SAFE_INTEGER)) {
      throw new PickleError(`integer out of safe range: ${value}`);
    }
    return Number(value);
  };

  const textInt = (s: string): number | boolean => {
    if (s === "01") return true;
    if (s === "00") return false;
    const v = Number(s.endsWith("L") ? s.slice(0, -1) : s);
    if (!Number.isSafeInteger(v)) throw new PickleError(`bad integer literal ${s}`);
    return v;
  };

  for (;;) {
    if (pos >= data.length) throw new PickleError("pickle exhausted before STOP");
    const op = u8();
    switch (op) {
      case 0x80: // PROTO
        u8();
        break;
      case 0x95: // FRAME (protocol 4): just a length prefix, content follows inline
        bytes(8);
        break;
      case 0x28: // ( MARK
        stack.push(MARK);
        break;
      case 0x2e: // . STOP
        if (stack.length !== 1) throw new PickleError("stack not reduced to result");
        return stack[0];
      case 0x30: // 0 POP
        stack.pop();
        break;
      case 0x32: // 2 DUP
        stack.push(stack[stack.length - 1]);
        break;
      case 0x4e: // N NONE
        stack.push(null);
        break;
      case 0x88: // NEWTRUE
        stack.push(true);
        break;
      case 0x89: // NEWFALSE
        stack.push(false);
        break;

      // integers
      case 0x49: // I text int
        stack.push(textInt(line()));
        break;
      case 0x4c: // L text long
        stack.push(textInt(line()));
        break;
      case 0x4b: // K BININT1
        stack.push(u8());
        break;
      case 0x4d: // M BININT2
        stack.push(u16());
        break;
      case 0x4a: // J BININT
        stack.push(i32());
        break;
      case 0x8a: // LONG1
        stack.push(longFromLE(bytes(u8())));
        break;
      case 0x8b: // LONG4
        stack.push(longFromLE(bytes(u32())));
        break;
      case 0x46: // F text float
        stack.push(Number(line()));
        break;
      case 0x47: { // G BINFLOAT (big-endian double)
        const v = data.readDoubleBE(pos);
        pos += 8;
        stack.push(v);
        break;
      }

      // strings
      case 0x53: { // S text string, quoted
        const raw = line();
        const body = raw.replace(/^['"]|['"]$/g, "");
        stack.push(body.replace(/\\x([0-9a-fA-F]{2})/g, (_, h) => String.fromCharCode(parseInt(h, 16)))
          .replace(/\\([\\'"nrt])/g, (_, c) => ({ "\\": "\\", "'": "'", '"': '"', n: "\n", r: "\r", t: "\t" }[c as string] as string)));
        break;
      }
      case 0x56: // V text unicode
        stack.push(line());
        break;
      case 0x55: // U SHORT_BINSTRING
        stack.push(bytes(u8()).toString("latin1"));
        break;
      case 0x54: // T BINSTRING
        stack.push(bytes(u32()).toString("latin1"));
        break;
      case 0x58: // X BINUNICODE
        stack.push(bytes(u32()).toString("utf8"));
        break;
      case 0x8c: // SHORT_BINUNICODE
        stack.push(bytes(u8()).toString("utf8"));
        break;
      case 0x8d: // BINUNICODE8
        stack.push(bytes(Number(data.readBigUInt64LE((pos += 8) - 8))).toString("utf8"));
        break;

      // containers
      case 0x5d: // ] EMPTY_LIST
        stack.push([]);
        break;
      case 0x29: // ) EMPTY_TUPLE
        stack.push([]);
        break;
      case 0x7d: // } EMPTY_DICT
        stack.push({});
        break;
      case 0x6c: // l LIST from mark
        stack.push(popMark());
        break;
      case 0x74: // t TUPLE from mark
        stack.push(popMark());
        break;
      case 0x85: { // TUPLE1
        const a = stack.pop();
        stack.push([a]);
        break;
      }
      case 0x86: { // TUPLE2
        const b = stack.pop();
        const a = stack.pop();
        stack.push([a, b]);
        break;
      }
      case 0x87: { // TUPLE3
        const c = stack.pop();
        const b = stack.pop();
        const a = stack.pop();
        stack.push([a, b, c]);
        break;
      }
      case 0x64: { // d DICT from mark pairs
        const obj: Record<string, unknown> = {};
        setPairs(obj, popMark());
        stack.push(obj);
        break;
      }
      case 0x61: { // a APPEND
        const v = stack.pop();
        const target = stack[stack.length - 1];
        if (!Array.isArray(target)) throw new PickleError("APPEND onto non-list");
        target.push(v);
        break;
      }
      case 0x65: { // e APPENDS
        const items = popMark();
        const target = stack[stack.length - 1];
        if (!Array.isArray(target)) throw new PickleError("APPENDS onto non-list");
        target.push(...items);
        break;
      }
      case 0x73: { // s SETITEM
        const v = stack.pop();
        const k = stack.pop();
        const target = stack[stack.length - 1];
        if (typeof target !== "object" || target === null || Array.isArray(target)) {
          throw new PickleError("SETITEM onto non-dict");
        }
        (target as Record<string, unknown>)[keyOf(k)] = v;
        break;
      }
      case 0x75: { // u SETITEMS
        const items = popMark();
        const target = stack[stack.length - 1];
        if (typeof target !== "object" || target === null || Array.isArray(target)) {
          throw new PickleError("SETITEMS onto non-dict");
        }
        setPairs(target as Record<string, unknown>, items);
        break;
      }

      // memo
      case 0x70: // p text PUT
        memo.set(Number(line()), stack[stack.length - 1]);
        break;
      case 0x71: // q BINPUT
        memo.set(u8(), stack[stack.length - 1]);
        break;
      case 0x72: // r LONG_BINPUT
        memo.set(u32(), stack[stack.length - 1]);
        break;
      case 0x94: // MEMOIZE
        memo.set(memo.size, stack[stack.length - 1]);
        break;
      case 0x67: // g text GET
        stack.push(memo.get(Number(line())));
        break;
      case 0x68: // h BINGET
        stack.push(memo.get(u8()));
        break;
      case 0x6a: // j LONG_BINGET
        stack.push(memo.get(u32()));
        break;

      default:
        throw new PickleError(
          `unsupported pickle opcode 0x${op.toString(16).padStart(2, "0")} at offset ${pos - 1}`
        );
    }
  }
}
