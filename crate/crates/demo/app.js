import init, { curve_explorer, convergence_explorer, pro_explorer } from "./pkg/streameval_demo.js";

const $ = (id) => document.getElementById(id);
const status = $("status");

function sliderValue(id) {
  return parseFloat($(id).value);
}

function bindControls(ids, onChange) {
  for (const id of ids) {
    const input = $(id);
    const label = input.parentElement.querySelector(".value");
    const show = () => {
      label.textContent = input.id.includes("bins")
        ? String(1 << parseInt(input.value, 10))
        : input.value;
    };
    show();
    input.addEventListener("input", () => {
      show();
      onChange();
    });
  }
}

// ---- minimal canvas plotting ----

function clearPlot(ctx) {
  ctx.fillStyle = "#fff";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

function frame(ctx, margin) {
  const { width: w, height: h } = ctx.canvas;
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1;
  ctx.strokeRect(margin, margin, w - 2 * margin, h - 2 * margin);
}

function polyline(ctx, points, toX, toY, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.8;
  ctx.beginPath();
  points.forEach(([x, y], i) => {
    const px = toX(x);
    const py = toY(y);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}

function axisLabel(ctx, text, x, y, angle = 0) {
  ctx.save();
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.translate(x, y);
  ctx.rotate(angle);
  ctx.textAlign = "center";
  ctx.fillText(text, 0, 0);
  ctx.restore();
}

function unitPlot(canvas, series, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const m = 34;
  clearPlot(ctx);
  frame(ctx, m);
  const toX = (x) => m + x * (canvas.width - 2 * m);
  const toY = (y) => canvas.height - m - y * (canvas.height - 2 * m);
  ctx.strokeStyle = "#ddd";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(toX(0), toY(0));
  ctx.lineTo(toX(1), toY(1));
  ctx.stroke();
  ctx.setLineDash([]);
  for (const [points, color] of series) polyline(ctx, points, toX, toY, color);
  axisLabel(ctx, xLabel, canvas.width / 2, canvas.height - 8);
  axisLabel(ctx, yLabel, 12, canvas.height / 2, -Math.PI / 2);
}

function metricsTable(el, rows) {
  el.innerHTML =
    "<tr><th></th><th>streaming</th><th>exact</th></tr>" +
    rows
      .map(
        ([name, s, e]) =>
          `<tr><td>${name}</td><td>${s.toFixed(5)}</td><td>${
            e === null ? "&mdash;" : e.toFixed(5)
          }</td></tr>`
      )
      .join("");
}

// ---- panel 1: ROC / PR ----

const curveIds = ["c-pos-mean", "c-pos-sigma", "c-neg-mean", "c-neg-sigma", "c-npos", "c-nneg", "c-bins", "c-seed"];

function refreshCurves() {
  const payload = JSON.parse(
    curve_explorer(
      sliderValue("c-pos-mean"),
      sliderValue("c-pos-sigma"),
      sliderValue("c-neg-mean"),
      sliderValue("c-neg-sigma"),
      sliderValue("c-npos"),
      sliderValue("c-nneg"),
      1 << sliderValue("c-bins"),
      sliderValue("c-seed")
    )
  );
  unitPlot($("c-roc"), [[payload.roc, "#0b62a4"]], "false positive rate", "true positive rate");
  unitPlot($("c-pr"), [[payload.pr, "#a4410b"]], "recall", "precision");
  metricsTable($("c-table"), [
    ["AUROC", payload.stream.auroc, payload.exact.auroc],
    ["AP", payload.stream.ap, payload.exact.ap],
    ["F1-max", payload.stream.f1_max, payload.exact.f1_max],
    ["IoU-max", payload.stream.iou_max, payload.exact.iou_max],
    ["F1 threshold", payload.stream.f1_threshold, null],
  ]);
}

// ---- panel 2: convergence ----

const convIds = ["v-n", "v-sep", "v-seed"];

function refreshConvergence() {
  const payload = JSON.parse(
    convergence_explorer(sliderValue("v-seed"), sliderValue("v-n"), sliderValue("v-sep"))
  );
  const canvas = $("v-plot");
  const ctx = canvas.getContext("2d");
  const m = 40;
  clearPlot(ctx);
  frame(ctx, m);
  const xs = payload.bins.map(Math.log2);
  const floor = 1e-8;
  const ys = payload.errors.map((e) => Math.log10(Math.max(e, floor)));
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  const yMin = Math.min(...ys, -7), yMax = Math.max(...ys, -1);
  const toX = (x) => m + ((x - xMin) / (xMax - xMin)) * (canvas.width - 2 * m);
  const toY = (y) => canvas.height - m - ((y - yMin) / (yMax - yMin)) * (canvas.height - 2 * m);
  // slope -1 guide through the first point
  ctx.setLineDash([4, 4]);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(toX(xs[0]), toY(ys[0]));
  const guideEnd = ys[0] - Math.log10(2) * (xMax - xMin);
  ctx.lineTo(toX(xMax), toY(guideEnd));
  ctx.stroke();
  ctx.setLineDash([]);
  polyline(ctx, xs.map((x, i) => [x, ys[i]]), toX, toY, "#0b62a4");
  ctx.fillStyle = "#0b62a4";
  xs.forEach((x, i) => {
    ctx.beginPath();
    ctx.arc(toX(x), toY(ys[i]), 3, 0, Math.PI * 2);
    ctx.fill();
  });
  axisLabel(ctx, "log2(bins)", canvas.width / 2, canvas.height - 8);
  axisLabel(ctx, "log10 |AUROC error|", 12, canvas.height / 2, -Math.PI / 2);
  metricsTable($("v-table"), [
    ["exact AUROC", payload.exact_auroc, payload.exact_auroc],
    ["error @16 bins", payload.errors[0], null],
    ["error @8192 bins", payload.errors[payload.errors.length - 1], null],
  ]);
}

// ---- panel 3: PRO ----

const proIds = ["p-size", "p-shapes", "p-sep", "p-limit", "p-bins", "p-seed"];

function refreshPro() {
  const payload = JSON.parse(
    pro_explorer(
      sliderValue("p-seed"),
      sliderValue("p-size"),
      sliderValue("p-shapes"),
      sliderValue("p-sep"),
      sliderValue("p-limit"),
      1 << sliderValue("p-bins")
    )
  );
  // heatmap with mask outlines
  const canvas = $("p-map");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = payload;
  const cell = Math.floor(Math.min(canvas.width / w, canvas.height / h));
  clearPlot(ctx);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const v = Math.max(0, Math.min(1, payload.scores[y * w + x]));
      const heat = Math.round(255 * v);
      ctx.fillStyle = `rgb(${heat}, ${Math.round(60 + 80 * (1 - v))}, ${255 - heat})`;
      ctx.fillRect(x * cell, y * cell, cell, cell);
      if (payload.mask[y * w + x]) {
        ctx.strokeStyle = "rgba(255,255,255,0.9)";
        ctx.strokeRect(x * cell + 0.5, y * cell + 0.5, cell - 1, cell - 1);
      }
    }
  }
  // PRO curve against FPR, with the integration limit marked
  const curveCanvas = $("p-curve");
  const cctx = curveCanvas.getContext("2d");
  const m = 34;
  clearPlot(cctx);
  frame(cctx, m);
  const toX = (x) => m + x * (curveCanvas.width - 2 * m);
  const toY = (y) => curveCanvas.height - m - y * (curveCanvas.height - 2 * m);
  cctx.strokeStyle = "#c33";
  cctx.setLineDash([5, 3]);
  cctx.beginPath();
  cctx.moveTo(toX(payload.fpr_limit), toY(0));
  cctx.lineTo(toX(payload.fpr_limit), toY(1));
  cctx.stroke();
  cctx.setLineDash([]);
  polyline(cctx, payload.curve, toX, toY, "#0b62a4");
  axisLabel(cctx, "false positive rate", curveCanvas.width / 2, curveCanvas.height - 8);
  axisLabel(cctx, "per-region overlap", 12, curveCanvas.height / 2, -Math.PI / 2);
  metricsTable($("p-table"), [
    ["AU-PRO", payload.aupro, payload.exact_aupro],
    ["regions", payload.regions, payload.regions],
  ]);
}

// ---- wiring ----

function debounce(fn) {
  let pending = null;
  return () => {
    if (pending) cancelAnimationFrame(pending);
    pending = requestAnimationFrame(() => {
      pending = null;
      fn();
    });
  };
}

init()
  .then(() => {
    status.textContent = "";
    bindControls(curveIds, debounce(refreshCurves));
    bindControls(convIds, debounce(refreshConvergence));
    bindControls(proIds, debounce(refreshPro));
    refreshCurves();
    refreshConvergence();
    refreshPro();
  })
  .catch((e) => {
    status.textContent =
      "failed to load ./pkg/streameval_demo.js - build it with:\n" +
      "  wasm-pack build crates/demo --target web\n" +
      String(e);
  });
