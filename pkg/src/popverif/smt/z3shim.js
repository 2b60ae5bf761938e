#!/usr/bin/env node
// SMT-LIB2 front end for the Z3 WebAssembly build (npm package "z3-solver").
//
// Reads commands on stdin, evaluates them in one persistent Z3 context, and
// writes whatever Z3 prints (check-sat answers, models, errors) to stdout.
// Input is chunked on top-level closing parentheses, so multi-command batches
// arrive at Z3 in one call. Exits on (exit) or end of input.
//
// The package is resolved with node's normal upward search: run
// `npm install` at the repository root, or point NODE_PATH at a directory
// whose node_modules contains z3-solver.

'use strict';

let initFn;
try {
  initFn = require('z3-solver').init;
} catch (err) {
  process.stderr.write(
    'z3shim: cannot resolve the "z3-solver" npm package.\n' +
    'Run `npm install` in the repository root (or set NODE_PATH).\n' + String(err) + '\n');
  process.exit(3);
}

(async () => {
  const { Z3 } = await initFn();
  const ctx = Z3.mk_context(Z3.mk_config());

  let buf = '';
  // Persistent scanner state so large inputs are not rescanned per chunk.
  let depth = 0, inString = false, inComment = false, scanned = 0, lastComplete = -1;
  let sawExit = false;

  async function evalChunk(text) {
    if (!text.trim()) return;
    if (/\(\s*exit\s*\)/.test(text)) sawExit = true;
    const out = await Z3.eval_smtlib2_string(ctx, text);
    if (out && out.length) {
      process.stdout.write(out.endsWith('\n') ? out : out + '\n');
    }
  }

  async function feed(chunk) {
    buf += chunk;
    for (let i = scanned; i < buf.length; i++) {
      const c = buf[i];
      if (inComment) { if (c === '\n') inComment = false; continue; }
      if (inString) { if (c === '"') inString = false; continue; }
      if (c === '"') inString = true;
      else if (c === ';') inComment = true;
      else if (c === '(') depth++;
      else if (c === ')') { depth--; if (depth <= 0) { depth = 0; lastComplete = i; } }
    }
    scanned = buf.length;
    if (lastComplete >= 0) {
      const complete = buf.slice(0, lastComplete + 1);
      buf = buf.slice(lastComplete + 1);
      scanned = buf.length;
      lastComplete = -1;
      await evalChunk(complete);
      if (sawExit) process.exit(0);
    }
  }

  process.stdin.setEncoding('utf8');
  for await (const chunk of process.stdin) {
    await feed(chunk);
  }
  process.exit(0);
})().catch((err) => {
  process.stderr.write('z3shim: ' + String(err && err.stack ? err.stack : err) + '\n');
  process.exit(2);
});
