// Build first with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, * as pmor from "./pkg/pmor_web.js";

const $ = (id) => document.getElementById(id);
const W_LO = 1e-2, W_HI = 1e3;

let current = null;

function tol() {
  return Math.pow(10, Number($("tol").value));
}

function status(msg, bad = false) {
  $("status").textContent = msg;
  $("status").className = bad ? "err" : "";
}

function call(f) {
  try {
    return JSON.parse(f());
  } catch (e) {
    status(String(e), true);
    return null;
  }
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40, 10, w - 50, h - 40);
}

// log10 of a positive value, clamped so zeros still plot
const lg = (x) => Math.log10(Math.max(x, 1e-300));

function drawDecay(run) {
  const c = $("decay"), ctx = c.getContext("2d");
  axes(ctx, c.width, c.height);
  const ys = run.degree_weights.map(lg);
  const lo = Math.min(...ys, Math.log10(current.tol)) - 1, hi = Math.max(...ys) + 1;
  const x = (k) => 40 + (k + 0.5) * (c.width - 50) / ys.length;
  const y = (v) => 10 + (hi - v) / (hi - lo) * (c.height - 40);
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(40, y(Math.log10(current.tol)));
  ctx.lineTo(c.width - 10, y(Math.log10(current.tol)));
  ctx.stroke();
  ctx.fillStyle = "#36c";
  ys.forEach((v, k) => ctx.fillRect(x(k) - 3, y(v) - 3, 6, 6));
  ctx.fillStyle = "#000";
  ctx.fillText(`max term weight per degree (log10), tol line in red`, 45, c.height - 12);
}

function drawSweep() {
  if (!current) return;
  const p = Number($("p").value);
  $("p-out").textContent = p.toFixed(2);
  const s = call(() => pmor.transfer_sweep(current.example, current.tol, p, W_LO, W_HI, 200));
  if (!s) return;
  const c = $("sweep"), ctx = c.getContext("2d");
  axes(ctx, c.width, c.height);
  const all = s.full.concat(s.reduced).map(lg);
  const lo = Math.min(...all), hi = Math.max(...all) + 1e-9;
  const x = (w) => 40 + (lg(w) - lg(W_LO)) / (lg(W_HI) - lg(W_LO)) * (c.width - 50);
  const y = (v) => 10 + (hi - lg(v)) / (hi - lo) * (c.height - 40);
  for (const [key, colour, dash] of [["full", "#333", []], ["reduced", "#e70", [6, 4]]]) {
    ctx.strokeStyle = colour;
    ctx.setLineDash(dash);
    ctx.beginPath();
    s.omega.forEach((w, k) => (k ? ctx.lineTo : ctx.moveTo).call(ctx, x(w), y(s[key][k])));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  ctx.fillStyle = "#000";
  ctx.fillText("|H(iω)| full (solid) and reduced (dashed), log-log", 45, c.height - 12);
}

function drawHeatmap() {
  if (!current) return;
  const m = call(() => pmor.error_heatmap(current.example, current.tol, W_LO, W_HI, 80, 30));
  if (!m) return;
  $("heat-out").textContent = `max abs ${m.max_abs_err.toExponential(2)}, rel ${m.max_rel_err.toExponential(2)}`;
  const c = $("heatmap"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const vals = m.err.flat().filter((v) => v !== null).map(lg);
  const lo = Math.min(...vals), hi = Math.max(...vals) + 1e-9;
  const cw = c.width / m.omega.length, ch = c.height / m.p.length;
  m.err.forEach((row, i) => row.forEach((v, j) => {
    const t = v === null ? 0 : (lg(v) - lo) / (hi - lo);
    ctx.fillStyle = v === null ? "#f0f" : `hsl(${240 - 240 * t}, 80%, 50%)`;
    ctx.fillRect(i * cw, c.height - (j + 1) * ch, cw + 1, ch + 1);
  }));
}

function reduce() {
  const example = $("example").value;
  status("reducing...");
  // let the status paint before the synchronous solve
  setTimeout(() => {
    const t0 = performance.now();
    const r = call(() => pmor.reduce(example, tol()));
    if (!r) return;
    current = r;
    const p = $("p");
    p.min = r.p_range[0];
    p.max = r.p_range[1];
    p.step = (r.p_range[1] - r.p_range[0]) / 100;
    status(`${r.states} states reduced to order ${r.order} in ${(performance.now() - t0).toFixed(0)} ms`);
    $("summary").textContent = JSON.stringify({ v: r.v, w: r.w, bundle_terms: r.bundle_terms }, null, 1);
    drawDecay(r.v);
    drawSweep();
  }, 10);
}

await init();
for (const name of JSON.parse(pmor.examples())) {
  $("example").add(new Option(name, name));
}
$("example").value = "toy2";
$("tol").oninput = () => ($("tol-out").textContent = tol().toExponential(0));
$("tol").oninput();
$("reduce").onclick = reduce;
$("p").oninput = drawSweep;
$("heat").onclick = drawHeatmap;
reduce();
