// Playground wiring. One drag gesture = one safety probe, then (on
// confirmation) one compose call; every mutation lands in the visible
// action log, and cards are only ever appended.

import { ApiError, Cell, Client, Verdict } from './api.js';
import { renderCard } from './render.js';
import { Action, Card, CardRef, OPERATOR_MENU, Workspace } from './workspace.js';

const FLIGHTS_CSV = [
  'Date,Src,Delay',
  '1,SFO,10', '2,SFO,15', '3,SFO,20',
  '1,OAK,15', '2,OAK,10', '3,OAK,5',
].join('\n');

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function describeAction(a: Action): string {
  switch (a.kind) {
    case 'add-table': return `table ${a.name} measure ${a.measure}`;
    case 'create-view': return `view ${a.spec.table} by ${a.spec.group.join(',') || 'all'}`;
    case 'compose': {
      const op = a.union ? 'union' : a.op ?? '-';
      const flag = a.override ? ' override' : '';
      return `compose ${refLabel(a.left)} ${op} ${refLabel(a.right)}${flag}`;
    }
    case 'decompose':
      return a.how === 'extract'
        ? `extract #${a.source}${a.predicate ? ` where ${a.predicate}` : ''}`
        : `explode #${a.source}${a.attrs ? ` by ${a.attrs.join(',')}` : ''}`;
    case 'lift': return `lift #${a.source} on ${a.features.join(',')}`;
  }
}

function notes(verdict: Verdict): string {
  return verdict.warnings.map((w) => w.message).join('; ');
}

function refLabel(ref: CardRef): string {
  if ('card' in ref) return `#${ref.card}`;
  if ('value' in ref) return String(ref.value);
  if ('viewset' in ref) return `{${ref.viewset.map((n) => `#${n}`).join(' ')}}`;
  if ('legend' in ref) return `#${ref.legend.card}[${ref.legend.attr}=${ref.legend.value}]`;
  if ('marks' in ref) return `#${ref.marks.card}[${ref.marks.predicate}]`;
  return `#${ref.cell.card}[cell]`;
}

class Playground {
  private ws: Workspace | null = null;
  private readonly cardsEl: HTMLElement;
  private readonly logEl: HTMLElement;
  private readonly bannerEl: HTMLElement;
  private readonly modeEl: HTMLInputElement;

  constructor(private readonly client: Client, root: HTMLElement) {
    const bar = el('div', 'toolbar');
    this.modeEl = el('input');
    this.modeEl.type = 'checkbox';
    const modeLabel = el('label', 'mode');
    modeLabel.append(this.modeEl, document.createTextNode(' composition mode'));
    this.modeEl.addEventListener('change', () => {
      if (this.ws) this.ws.composeMode = this.modeEl.checked;
      root.classList.toggle('composing', this.modeEl.checked);
    });

    const demo = el('button', 'demo', 'load flight demo');
    demo.addEventListener('click', () => void this.loadDemo());
    const constBtn = el('button', '', 'drop a constant');
    constBtn.addEventListener('click', () => void this.composeConstant());
    bar.append(modeLabel, demo, constBtn);

    this.bannerEl = el('div', 'banner');
    this.bannerEl.hidden = true;
    this.cardsEl = el('div', 'cards');
    const logBox = el('div', 'logbox');
    logBox.append(el('h2', '', 'action log'));
    this.logEl = el('ol', 'log');
    logBox.append(this.logEl);
    const replayBtn = el('button', '', 'replay into fresh session');
    replayBtn.addEventListener('click', () => void this.replay());
    logBox.append(replayBtn);

    root.append(bar, this.bannerEl, this.cardsEl, logBox);
  }

  private banner(text: string): void {
    this.bannerEl.textContent = text;
    this.bannerEl.hidden = false;
    setTimeout(() => { this.bannerEl.hidden = true; }, 6000);
  }

  private need(): Workspace {
    if (!this.ws) throw new Error('no session yet');
    return this.ws;
  }

  private async loadDemo(): Promise<void> {
    try {
      if (!this.ws) this.ws = await Workspace.create(this.client);
      this.ws.composeMode = this.modeEl.checked;
      await this.ws.addTable('flights', FLIGHTS_CSV, 'Delay');
      this.syncLog();
      const mk = (filter: string, title: string) => this.need().createView({
        table: 'flights', group: ['Date'], agg: { func: 'avg', attr: 'Delay' },
        mark: 'bar', filter, title, channels: { Date: 'x' },
      });
      this.showCard(await mk("Src = 'SFO'", 'SFO delay'));
      this.showCard(await mk("Src = 'OAK'", 'OAK delay'));
      this.syncLog();
    } catch (err) {
      this.showError(err);
    }
  }

  private showCard(card: Card): void {
    const box = el('div', 'card');
    box.draggable = true;
    box.dataset['ordinal'] = String(card.ordinal);
    box.addEventListener('dragstart', (ev) => {
      if (!this.modeEl.checked || !ev.dataTransfer) return;
      ev.dataTransfer.setData('text/plain', String(card.ordinal));
    });
    box.addEventListener('dragover', (ev) => {
      if (this.modeEl.checked) ev.preventDefault();
    });
    box.addEventListener('drop', (ev) => {
      ev.preventDefault();
      const from = Number(ev.dataTransfer?.getData('text/plain'));
      if (Number.isInteger(from) && from !== card.ordinal) {
        void this.dragCompose({ card: from }, { card: card.ordinal }, ev);
      }
    });

    const head = el('div', 'head', `#${card.ordinal} ${card.title}`);
    const tools = el('span', 'tools');
    for (const [label, fn] of [
      ['Ξ', () => this.explodeMenu(card)],
      ['σ', () => this.extractMenu(card)],
      ['λ', () => this.liftMenu(card)],
    ] as const) {
      const b = el('button', 'tool', label);
      b.addEventListener('click', () => void fn());
      tools.append(b);
    }
    head.append(tools);
    const chart = el('div', 'chart');
    chart.innerHTML = renderCard(card.doc);
    box.append(head, chart);
    this.cardsEl.append(box);
  }

  // one safety call, then a context menu over the drop point; Enter (or a
  // click on the default) confirms, Escape abandons the gesture
  private async dragCompose(left: CardRef, right: CardRef, at: MouseEvent): Promise<void> {
    const ws = this.need();
    let verdict: Verdict;
    try {
      verdict = await ws.beginCompose(left, right);
    } catch (err) {
      this.showError(err);
      return;
    }
    if (verdict.status === 'Rejected') {
      ws.cancelCompose();
      this.banner(`rejected: ${notes(verdict)}`);
      return;
    }
    const op = await this.operatorMenu(at.clientX, at.clientY);
    if (op === null) {
      ws.cancelCompose();
      return;
    }
    let override = false;
    if (verdict.status === 'Overridable') {
      override = await this.confirmOverride(verdict);
      if (!override) {
        ws.cancelCompose();
        return;
      }
    }
    try {
      for (const card of await ws.confirmCompose(op, override)) this.showCard(card);
      this.syncLog();
    } catch (err) {
      this.showError(err);
    }
  }

  private operatorMenu(x: number, y: number): Promise<string | null> {
    return new Promise((resolve) => {
      const menu = el('div', 'opmenu');
      menu.style.left = `${x}px`;
      menu.style.top = `${y}px`;
      menu.tabIndex = -1;
      const done = (op: string | null) => {
        menu.remove();
        resolve(op);
      };
      OPERATOR_MENU.forEach((op, i) => {
        const b = el('button', i === 0 ? 'default' : '', op);
        b.addEventListener('click', () => done(op));
        menu.append(b);
      });
      menu.addEventListener('keydown', (ev) => {
        if (ev.key === 'Enter') done(OPERATOR_MENU[0] ?? '-');
        if (ev.key === 'Escape') done(null);
      });
      document.body.append(menu);
      menu.focus();
    });
  }

  private confirmOverride(verdict: Verdict): Promise<boolean> {
    return new Promise((resolve) => {
      const dialog = el('div', 'override');
      dialog.append(el('p', '', `caution: ${notes(verdict)}`));
      const go = el('button', '', 'compose anyway');
      const stop = el('button', '', 'cancel');
      go.addEventListener('click', () => { dialog.remove(); resolve(true); });
      stop.addEventListener('click', () => { dialog.remove(); resolve(false); });
      dialog.append(go, stop);
      document.body.append(dialog);
    });
  }

  private async composeConstant(): Promise<void> {
    const raw = window.prompt('constant value', '20');
    if (raw === null) return;
    const target = window.prompt('target card ordinal', '0');
    if (target === null) return;
    await this.dragCompose({ card: Number(target) }, { value: Number(raw) },
                           new MouseEvent('click'));
  }

  private async explodeMenu(card: Card): Promise<void> {
    if (card.doc.kind !== 'view') return;
    const raw = window.prompt('explode on attributes (comma separated, blank = marks)',
                              card.doc.group_attrs.join(','));
    if (raw === null) return;
    const attrs = raw.trim() ? raw.split(',').map((s) => s.trim()) : undefined;
    try {
      for (const made of await this.need().explode(card.ordinal, attrs)) this.showCard(made);
      this.syncLog();
    } catch (err) {
      this.showError(err);
    }
  }

  private async extractMenu(card: Card): Promise<void> {
    const pred = window.prompt('extract predicate (blank = whole view)', '');
    if (pred === null) return;
    try {
      for (const made of await this.need().extract(card.ordinal, pred.trim() || undefined)) {
        this.showCard(made);
      }
      this.syncLog();
    } catch (err) {
      this.showError(err);
    }
  }

  private async liftMenu(card: Card): Promise<void> {
    if (card.doc.kind !== 'view') return;
    const feats = window.prompt('model features', card.doc.group_attrs.join(','));
    if (feats === null || !feats.trim()) return;
    const cond = window.prompt('condition attributes (blank = none)', '') ?? '';
    try {
      const made = await this.need().liftModel(
        card.ordinal,
        feats.split(',').map((s) => s.trim()),
        cond.trim() ? cond.split(',').map((s) => s.trim()) : []);
      for (const m of made) this.showCard(m);
      this.syncLog();
    } catch (err) {
      this.showError(err);
    }
  }

  private async replay(): Promise<void> {
    const ws = this.ws;
    if (!ws) return;
    try {
      const fresh = await Workspace.replay(this.client, ws.log);
      this.banner(`replayed ${ws.log.length} actions into ${fresh.session}: ` +
                  `${fresh.cards.length} cards`);
    } catch (err) {
      this.showError(err);
    }
  }

  private syncLog(): void {
    const ws = this.need();
    while (this.logEl.childElementCount < ws.log.length) {
      const action = ws.log[this.logEl.childElementCount];
      if (!action) break;
      this.logEl.append(el('li', '', describeAction(action)));
    }
  }

  private showError(err: unknown): void {
    if (err instanceof ApiError) {
      const why = err.verdict ? ` (${notes(err.verdict)})` : '';
      this.banner(`${err.payload.error}: ${err.payload.message}${why}`);
    } else {
      this.banner(String(err));
    }
  }
}

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get('api');
  return override ?? 'http://localhost:8787';
}

const rootEl = document.getElementById('app');
if (rootEl) new Playground(new Client(apiBase()), rootEl);

export { Playground, describeAction, refLabel };
export type { Cell };
