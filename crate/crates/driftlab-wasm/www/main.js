// Plain-JS driver for the driftlab wasm demo. Build the wasm package with
//   wasm-pack build crates/driftlab-wasm --target web --out-dir www/pkg
// then serve this directory (e.g. python3 -m http.server).

import init, { DemoLab } from "./pkg/driftlab_wasm.js";

const $ = (id) => document.getElementById(id);

let lab = null;
let running = true;
let seed = 1;

function params() {
  return {
    n: parseInt($("gridn").value, 10),
    scenario: $("scenario").value,
    alpha: parseFloat($("alpha").value),
    gTarget: parseFloat($("gtarget").value),
    cBar: parseFloat($("cbar").value),
  };
}

function rebuild() {
  const p = params();
  try {
    lab = new DemoLab(p.n, p.scenario, p.alpha, p.gTarget, p.cBar, seed);
  } catch (e) {
    $("status").textContent = `error: ${e}`;
    $("status").className = "breached";
    lab = null;
  }
}

const scratch = document.createElement("canvas");

function drawField() {
  const canvas = $("field");
  const ctx = canvas.getContext("2d");
  const n = lab.grid_n();
  const rgba = lab.field_rgba(parseInt($("viewfield").value, 10));
  const image = new ImageData(new Uint8ClampedArray(rgba), n, n);
  scratch.width = n;
  scratch.height = n;
  scratch.getContext("2d").putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(scratch, 0, 0, canvas.width, canvas.height);
}

function polyline(ctx, pts, color) {
  if (pts.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (const [x, y] of pts.slice(1)) ctx.lineTo(x, y);
  ctx.stroke();
}

function drawProfile() {
  const canvas = $("profile");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const flat = lab.scan_profile();
  const rungs = [];
  for (let i = 0; i < flat.length; i += 2) rungs.push([flat[i], flat[i + 1]]);
  if (!rungs.length) return;
  const xs = rungs.map(([r]) => Math.log(r));
  const ys = rungs.map(([, v]) => v);
  const xmin = Math.min(...xs), xmax = Math.max(...xs);
  const ymax = Math.max(...ys, 1e-12);
  const pad = 14;
  const pts = rungs.map(([r, v], i) => [
    pad + ((Math.log(r) - xmin) / (xmax - xmin || 1)) * (canvas.width - 2 * pad),
    canvas.height - pad - (v / ymax) * (canvas.height - 2 * pad),
  ]);
  polyline(ctx, pts, "#61afef");
  ctx.fillStyle = "#61afef";
  for (const [x, y] of pts) ctx.fillRect(x - 2, y - 2, 4, 4);
  ctx.fillStyle = "#8a93a3";
  ctx.font = "11px system-ui";
  ctx.fillText("scale r (log) →", canvas.width - 100, canvas.height - 3);
}

function drawSeries() {
  const canvas = $("series");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const flat = lab.series();
  const rows = [];
  for (let i = 0; i < flat.length; i += 4) rows.push(flat.slice(i, i + 4));
  if (rows.length < 2) return;
  const tmax = rows[rows.length - 1][0] || 1e-9;
  const pad = 14;
  const sx = (t) => pad + (t / tmax) * (canvas.width - 2 * pad);
  const curves = [
    { idx: 1, color: "#e5c07b" },
    { idx: 2, color: "#6fd08c" },
    { idx: 3, color: "#e06c75" },
  ];
  for (const { idx, color } of curves) {
    const vals = rows.map((r) => r[idx]);
    const vmax = Math.max(...vals, 1e-12);
    const pts = rows.map((r) => [
      sx(r[0]),
      canvas.height - pad - (r[idx] / vmax) * (canvas.height - 2 * pad),
    ]);
    polyline(ctx, pts, color);
  }
  // the S = 1 breach threshold, in S-normalized coordinates
  const smax = Math.max(...rows.map((r) => r[3]), 1e-12);
  if (smax >= 1) {
    const y = canvas.height - pad - (1 / smax) * (canvas.height - 2 * pad);
    ctx.strokeStyle = "#e06c7566";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, y);
    ctx.lineTo(canvas.width - pad, y);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function tick() {
  if (lab && running) {
    try {
      lab.advance(1);
    } catch (e) {
      $("status").textContent = `error: ${e}`;
      $("status").className = "breached";
      running = false;
    }
    drawField();
    drawProfile();
    drawSeries();
    $("time").textContent = lab.time().toFixed(3);
    const flat = lab.series();
    const s = flat.length >= 4 ? flat[flat.length - 1] : NaN;
    $("sval").textContent = s.toFixed(4);
    const status = lab.status();
    $("status").textContent = status;
    $("status").className = status;
  }
  requestAnimationFrame(tick);
}

for (const id of ["alpha", "gtarget", "cbar"]) {
  $(id).addEventListener("input", () => {
    $(`${id === "gtarget" ? "gtarget" : id}-val`).textContent =
      parseFloat($(id).value).toFixed(2);
  });
}
for (const id of ["scenario", "gridn", "alpha", "gtarget", "cbar"]) {
  $(id).addEventListener("change", () => {
    $("gridn-val").textContent = $("gridn").value;
    rebuild();
  });
}
$("toggle").addEventListener("click", () => {
  running = !running;
  $("toggle").textContent = running ? "pause" : "resume";
});
$("reset").addEventListener("click", () => {
  seed = (seed * 1103515245 + 12345) % 2147483647;
  rebuild();
});

await init();
rebuild();
tick();
