import katex from 'katex';
import { describe, expect, it } from 'vitest';

import { escapeHtml, renderMarkdown, renderMath } from '../src/markdown';

const withKatex = { katex };

describe('renderMarkdown', () => {
    it('renders ### lines as h3 headings', () => {
        const html = renderMarkdown('### The Challenge\n\nBody text.');
        expect(html).toContain('<h3>The Challenge</h3>');
        expect(html).toContain('<p>Body text.</p>');
    });

    it('renders unordered lists', () => {
        const html = renderMarkdown('- first\n- second');
        expect(html).toBe('<ul><li>first</li><li>second</li></ul>');
    });

    it('renders ordered lists', () => {
        const html = renderMarkdown('1. alpha\n2. beta');
        expect(html).toBe('<ol><li>alpha</li><li>beta</li></ol>');
    });

    it('renders inline math with katex', () => {
        const html = renderMarkdown('Set $nums = [2,7,11,15]$ today.', withKatex);
        expect(html).toContain('katex');
        expect(html).not.toContain('$nums');
    });

    it('renders block math with katex in display mode', () => {
        const html = renderMarkdown('$$A_n = \\{ k \\in \\mathbb{N} \\mid k \\ge n \\}.$$', withKatex);
        expect(html).toContain('katex-display');
    });

    it('renders multi-line block math', () => {
        const html = renderMarkdown('$$\nx = 1\n$$', withKatex);
        expect(html).toContain('katex-display');
    });

    it('falls back to raw source for malformed latex', () => {
        const html = renderMarkdown('bad $\\frac{$ math', withKatex);
        expect(html).toContain('math-raw');
        expect(html).toContain('\\frac{');
    });

    it('falls back to raw when no math renderer is available', () => {
        const html = renderMarkdown('value $x+1$ here');
        expect(html).toContain('<span class="math math-raw">$x+1$</span>');
    });

    it('renders bold and italic emphasis', () => {
        const html = renderMarkdown('**Input:** and *Output:*');
        expect(html).toContain('<strong>Input:</strong>');
        expect(html).toContain('<em>Output:</em>');
    });

    it('escapes html in text content', () => {
        const html = renderMarkdown('evil <script>alert(1)</script>');
        expect(html).not.toContain('<script>');
        expect(html).toContain('&lt;script&gt;');
    });

    it('escapes html inside raw math fallback', () => {
        const html = renderMath('<img src=x>', false);
        expect(html).not.toContain('<img');
    });

    it('joins consecutive lines into one paragraph', () => {
        const html = renderMarkdown('line one\nline two');
        expect(html).toBe('<p>line one line two</p>');
    });

    it('keeps an unterminated math block visible as raw text', () => {
        const html = renderMarkdown('$$x = 1');
        expect(html).toContain('x = 1');
    });
});

describe('escapeHtml', () => {
    it('escapes the dangerous four', () => {
        expect(escapeHtml('<a href="x">&</a>')).toBe('&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;');
    });
});
