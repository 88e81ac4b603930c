/**
 * Risk badge colour tokens with a colour-blind friendly alternative.
 * The preference persists locally and toggling never refetches data.
 */

export type PaletteName = 'standard' | 'colour_blind';

export const PALETTES: Record<PaletteName, Record<string, string>> = {
  standard: {
    low: 'green',
    medium: 'yellow',
    high: 'orange',
    'very high': 'red',
  },
  colour_blind: {
    low: 'blue',
    medium: 'light-blue',
    high: 'light-orange',
    'very high': 'orange',
  },
};

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const STORAGE_KEY = 'venuetrace-portal-palette';

export class PaletteState {
  private current: PaletteName;

  constructor(private readonly storage: KeyValueStore) {
    const saved = storage.getItem(STORAGE_KEY);
    this.current = saved === 'colour_blind' ? 'colour_blind' : 'standard';
  }

  get name(): PaletteName {
    return this.current;
  }

  colour(level: string): string {
    return PALETTES[this.current][level.toLowerCase()] ?? 'grey';
  }

  toggle(): PaletteName {
    this.current = this.current === 'standard' ? 'colour_blind' : 'standard';
    this.storage.setItem(STORAGE_KEY, this.current);
    return this.current;
  }
}
