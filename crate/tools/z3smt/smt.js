// Reads one SMT-LIB2 script from stdin, evaluates it with the z3 wasm build,
// and writes z3's answer (sat/unsat/unknown plus any model) to stdout.
const { init } = require('z3-solver');

(async () => {
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  const chunks = [];
  process.stdin.on('data', (d) => chunks.push(d));
  process.stdin.on('end', async () => {
    try {
      const out = await Z3.eval_smtlib2_string(ctx, chunks.join(''));
      process.stdout.write(out);
      process.exit(0);
    } catch (e) {
      process.stdout.write(`(error "${String(e).replace(/"/g, "'")}")\n`);
      process.exit(1);
    }
  });
})();
