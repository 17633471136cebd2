import init, { demo, two_point, rate_sweep } from "./pkg/histmode_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xlo, xhi, ylo, yhi, pad = 30) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const sx = (x) => pad + (x - xlo) / (xhi - xlo) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - (y - ylo) / (yhi - ylo) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  return { ctx, sx, sy };
}

function polyline(ctx, xs, ys, color, width = 1.5) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(x, ys[i]) : ctx.moveTo(x, ys[i])));
  ctx.stroke();
}

function vline(ctx, x, top, bottom, color, dash = []) {
  ctx.setLineDash(dash);
  polyline(ctx, [x, x], [top, bottom], color, 2);
  ctx.setLineDash([]);
}

function fail(out, e) {
  out.className = "out err";
  out.textContent = String(e.message ?? e);
}

function runDemo() {
  const out = $("d-out");
  const d = num("d-dim");
  const params = {
    beta: num("d-beta"), n: num("d-n"), seed: num("d-seed"), kappa: num("d-kappa"),
    mode: d === 1 ? [0.3] : [0.3, 0.6],
  };
  if ($("d-h").value !== "") params.h = num("d-h");
  let r;
  try { r = JSON.parse(demo(JSON.stringify(params))); } catch (e) { return fail(out, e); }
  out.className = "out";
  const [lo, hi] = r.support;
  const c = $("d-canvas");
  if (d === 1) {
    const maxCount = Math.max(...r.bins.map((b) => b.count));
    const { ctx, sx, sy } = frame(c, lo[0], hi[0], 0, 1.05);
    ctx.fillStyle = "#cfe0f5";
    for (const b of r.bins) {
      const y = b.count / maxCount;
      ctx.fillRect(sx(b.corner[0]), sy(y), sx(b.corner[0] + r.h) - sx(b.corner[0]), sy(0) - sy(y));
    }
    polyline(ctx, r.curve.map((p) => sx(p[0])), r.curve.map((p) => sy(p[1])), "#333");
    r.steps.forEach((s, i) => {
      ctx.fillStyle = `rgba(220, 120, 0, ${0.15 + 0.5 * i / r.steps.length})`;
      ctx.fillRect(sx(s.lo[0]), sy(-0.02 - 0.012 * i), Math.max(1, sx(s.hi[0]) - sx(s.lo[0])), 4);
    });
    vline(ctx, sx(r.mode[0]), sy(0), sy(1.05), "#000", [4, 4]);
    vline(ctx, sx(r.mono[0]), sy(0), sy(1.05), "#1f5fbf");
    vline(ctx, sx(r.multi[0]), sy(0), sy(1.05), "#d06000");
  } else {
    const { ctx, sx, sy } = frame(c, lo[0], hi[0], lo[1], hi[1]);
    ctx.fillStyle = "rgba(40, 40, 40, 0.35)";
    for (const p of r.points) ctx.fillRect(sx(p[0]) - 1, sy(p[1]) - 1, 2, 2);
    r.steps.forEach((s) => {
      ctx.strokeStyle = "#d06000";
      ctx.strokeRect(sx(s.lo[0]), sy(s.hi[1]), sx(s.hi[0]) - sx(s.lo[0]), sy(s.lo[1]) - sy(s.hi[1]));
    });
    const dot = (p, color) => { ctx.fillStyle = color; ctx.fillRect(sx(p[0]) - 4, sy(p[1]) - 4, 8, 8); };
    dot(r.mode, "#000"); dot(r.mono, "#1f5fbf"); dot(r.multi, "#d06000");
  }
  out.textContent =
    `true mode ${r.mode.join(", ")}   (black dashed)\n` +
    `mono  (blue)   h = ${r.h.toPrecision(4)}  estimate ${r.mono.map((x) => x.toPrecision(6)).join(", ")}  error ${r.mono_error.toPrecision(3)}\n` +
    `multi (orange) ${r.steps.length} scales  estimate ${r.multi.map((x) => x.toPrecision(6)).join(", ")}  error ${r.multi_error.toPrecision(3)}`;
}

function runPair() {
  const out = $("p-out");
  let r;
  try {
    r = JSON.parse(two_point(JSON.stringify({ beta: num("p-beta"), h: num("p-h"), h0: 0.5 })));
  } catch (e) { return fail(out, e); }
  out.className = "out";
  const ymax = Math.max(...r.f2) * 1.05;
  const ymin = Math.min(0, ...r.g) * 1.05;
  const { ctx, sx, sy } = frame($("p-canvas"), r.x[0], r.x[r.x.length - 1], ymin, ymax);
  polyline(ctx, r.x.map(sx), r.f1.map(sy), "#1f5fbf");
  polyline(ctx, r.x.map(sx), r.f2.map(sy), "#d06000");
  polyline(ctx, r.x.map(sx), r.g.map(sy), "#2a8a2a", 1);
  polyline(ctx, [sx(r.x[0]), sx(r.x[r.x.length - 1])], [sy(0), sy(0)], "#bbb", 1);
  out.textContent =
    `f1 blue, f2 orange, g = f2 - f1 green\n` +
    `mode of f2 = ${r.f2_mode.toPrecision(4)}   integral of g = ${r.integral_of_g.toExponential(2)}   chi^2 = ${r.chi_squared.toExponential(3)}`;
}

function runSweep() {
  const out = $("s-out");
  out.className = "out";
  out.textContent = "running...";
  setTimeout(() => {
    let r;
    try {
      r = JSON.parse(rate_sweep(JSON.stringify({ beta: num("s-beta"), reps: num("s-reps") })));
    } catch (e) { return fail(out, e); }
    const lx = r.sizes.map(Math.log10);
    const all = [...r.mono, ...r.multi].map(Math.log10);
    const { ctx, sx, sy } = frame($("s-canvas"), lx[0] - 0.1, lx[lx.length - 1] + 0.1, Math.min(...all) - 0.1, Math.max(...all) + 0.1);
    polyline(ctx, lx.map(sx), r.mono.map((e) => sy(Math.log10(e))), "#1f5fbf", 2);
    polyline(ctx, lx.map(sx), r.multi.map((e) => sy(Math.log10(e))), "#d06000", 2);
    const fmt = (s) => (s === null ? "n/a" : s.toFixed(3));
    out.textContent =
      `log10 median error against log10 n\n` +
      `slope mono ${fmt(r.mono_slope)}, multi ${fmt(r.multi_slope)}, theory ${r.reference_slope.toFixed(3)}`;
  }, 10);
}

await init();
$("d-run").onclick = runDemo;
$("d-dim").onchange = runDemo;
$("p-h").oninput = runPair;
$("p-beta").onchange = runPair;
$("s-run").onclick = runSweep;
runDemo();
runPair();
