import init, { fiber, reduce_preview, training_curves } from "./pkg/thop_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function call(outId, f) {
  const out = $(outId);
  out.classList.remove("err");
  try {
    return JSON.parse(f());
  } catch (e) {
    out.textContent = String(e);
    out.classList.add("err");
    return null;
  }
}

function drawGraph(view, i, j) {
  const c = $("graph"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const r = Math.min(c.width, c.height) / 2 - 24;
  const pos = [...Array(view.n).keys()].map((v) => {
    const a = (2 * Math.PI * v) / view.n - Math.PI / 2;
    return [c.width / 2 + r * Math.cos(a), c.height / 2 + r * Math.sin(a)];
  });
  g.strokeStyle = "#999";
  for (const [u, v] of view.edges) {
    g.beginPath();
    g.moveTo(...pos[u]);
    g.lineTo(...pos[v]);
    g.stroke();
  }
  const peak = Math.max(1, ...view.counts);
  pos.forEach(([x, y], v) => {
    g.beginPath();
    g.arc(x, y, 12, 0, 2 * Math.PI);
    g.fillStyle = v === i || v === j ? "#d62728" : `rgba(31,119,180,${0.15 + 0.85 * view.counts[v] / peak})`;
    g.fill();
    g.fillStyle = "#000";
    g.textAlign = "center";
    g.textBaseline = "middle";
    g.fillText(v, x, y);
  });
}

function drawBars(values) {
  const c = $("fiber"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const peak = Math.max(1e-12, ...values);
  const w = (c.width - 20) / values.length;
  values.forEach((v, k) => {
    const h = (v / peak) * (c.height - 40);
    g.fillStyle = COLORS[0];
    g.fillRect(10 + k * w + 2, c.height - 20 - h, w - 4, h);
    g.fillStyle = "#000";
    g.textAlign = "center";
    g.fillText(k, 10 + (k + 0.5) * w, c.height - 6);
    g.fillText(v.toFixed(3), 10 + (k + 0.5) * w, c.height - 26 - h);
  });
}

function showFiber() {
  const i = num("f-i"), j = num("f-j");
  const view = call("f-out", () => fiber($("edges").value, num("f-length"), $("f-sem").value, i, j));
  if (!view) return;
  drawGraph(view, i, j);
  drawBars(view.fiber);
  $("f-out").textContent =
    `counts  [${view.counts.join(", ")}]\n` +
    `sum T = ${view.fiber_sum.toFixed(6)}   paths/walks = ${view.path_count}`;
}

function heatmap(matrix) {
  const n = matrix.length, cell = Math.max(8, Math.floor(160 / n));
  const c = document.createElement("canvas");
  c.width = c.height = n * cell;
  const g = c.getContext("2d");
  const peak = Math.max(1e-12, ...matrix.flat().map(Math.abs));
  matrix.forEach((row, i) =>
    row.forEach((v, j) => {
      const t = Math.abs(v) / peak;
      g.fillStyle = v >= 0 ? `rgba(31,119,180,${t})` : `rgba(214,39,40,${t})`;
      g.fillRect(j * cell, i * cell, cell, cell);
    }));
  return c;
}

function showReduce() {
  const view = call("r-out", () =>
    reduce_preview($("edges").value, num("r-length"), $("r-sem").value, $("r-method").value, num("r-d"), BigInt(num("r-seed"))));
  const box = $("slices");
  box.replaceChildren();
  if (!view) return;
  view.slices.forEach((s) => box.appendChild(heatmap(s)));
  $("r-out").textContent = `n = ${view.n}, d = ${view.d}` +
    (view.reconstruction_error === null ? "" : `, reconstruction error ${view.reconstruction_error.toExponential(3)}`);
}

function showCurves() {
  $("t-out").textContent = "training...";
  setTimeout(() => {
    const curves = call("t-out", () =>
      training_curves(num("t-size"), num("t-pin"), num("t-pout"), BigInt(num("t-seed")), num("t-epochs"), num("t-depth")));
    if (!curves) return;
    const c = $("curves"), g = c.getContext("2d");
    g.clearRect(0, 0, c.width, c.height);
    const peak = Math.max(...curves.flatMap((cv) => cv.loss));
    const epochs = curves[0].loss.length;
    const x = (e) => 40 + (e / Math.max(1, epochs - 1)) * (c.width - 60);
    const y = (v) => c.height - 20 - (v / peak) * (c.height - 40);
    g.strokeStyle = "#888";
    g.strokeRect(40, 20, c.width - 60, c.height - 40);
    curves.forEach((cv, m) => {
      g.strokeStyle = COLORS[m];
      g.setLineDash(m === 1 ? [6, 4] : []);
      g.beginPath();
      cv.loss.forEach((v, e) => (e ? g.lineTo(x(e), y(v)) : g.moveTo(x(e), y(v))));
      g.stroke();
      g.fillStyle = COLORS[m];
      g.fillText(cv.name, c.width - 120, 36 + 14 * m);
    });
    g.setLineDash([]);
    $("t-out").textContent = curves.map((cv) => `${cv.name.padEnd(9)} test accuracy ${cv.final_test_acc.toFixed(4)}`).join("\n");
  }, 10);
}

await init();
$("f-go").onclick = showFiber;
$("r-go").onclick = showReduce;
$("t-go").onclick = showCurves;
showFiber();
showReduce();
