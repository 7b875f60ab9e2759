using System;
using System.Collections.Generic;
using System.Linq;

namespace Shop
{
    public record Item(string Name, decimal Price, int Quantity);

    public class Cart
    {
        private readonly List<Item> _items = new List<Item>();

        public void Add(string name, decimal price, int quantity = 1)
        {
            if (quantity <= 0)
            {
                throw new ArgumentOutOfRangeException(nameof(quantity));
            }
            var existing = _items.FirstOrDefault(i => i.Name == name);
            if (existing != null)
            {
                _items.Remove(existing);
                quantity += existing.Quantity;
            }
            _items.Add(new Item(name, price, quantity));
        }

        public decimal Subtotal()
        {
            decimal total = 0;
            foreach (var item in _items)
            {
                total += item.Price * item.Quantity;
            }
            return total;
        }

        public decimal Total(decimal taxRate)
        {
            var subtotal = Subtotal();
            return Math.Round(subtotal * (1 + taxRate), 2);
        }

        public int Count => _items.Sum(i => i.Quantity);
    }

    public static class Program
    {
        public static void Main()
        {
            var cart = new Cart();
            cart.Add("book", 12.5m, 2);
            cart.Add("pen", 1.2m);
            Console.WriteLine($"{cart.Count} items, {cart.Total(0.2m)}");
        }
    }
}
